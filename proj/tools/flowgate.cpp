#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flowgate/bench.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/runner.hpp"
#include "flowgate/scenario_io.hpp"
#include "flowgate/traffic_gen.hpp"

namespace fs = std::filesystem;
using namespace flowgate;

namespace {

struct CommonArgs {
  std::string scenario;
  std::string out{"."};
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::optional<std::string> offload;
  std::optional<std::string> dpi;
  std::optional<std::string> preset;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool scenario_required) {
  auto* s = cmd->add_option("--scenario", a.scenario, "Scenario file (JSON)");
  if (scenario_required) s->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--seed", a.seed, "Override the scenario seed");
  cmd->add_option("--scale", a.scale, "Override the scale factor");
  cmd->add_option("--offload", a.offload, "Hardware offload")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--dpi", a.dpi, "Deep packet inspection")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--preset", a.preset, "Hardware preset")->check(CLI::IsMember({"nt200a02", "desk"}));
}

ScenarioConfig apply_overrides(ScenarioConfig cfg, const CommonArgs& a) {
  if (a.scale) cfg.scale_factor = *a.scale;
  if (a.preset) cfg.hw = hw_preset(*hw_preset_from_string(*a.preset), cfg.scale_factor, cfg.hw.streams);
  if (a.seed) cfg.seed = *a.seed;
  if (a.offload) cfg.probe.offload_enabled = *a.offload == "on";
  if (a.dpi) cfg.probe.dpi_enabled = *a.dpi == "on";
  cfg.validate();
  return cfg;
}

ScenarioConfig load(const CommonArgs& a) {
  return apply_overrides(a.scenario.empty() ? ScenarioConfig{} : load_scenario(a.scenario), a);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw SinkWriteError("cannot open " + p.string() + " for writing");
  return f;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("flowgate");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLOWGATE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

int cmd_run(const CommonArgs& a, bool ticks_csv, const std::string& trace_path) {
  const ScenarioConfig cfg = load(a);
  fs::create_directories(a.out);
  std::optional<std::vector<Packet>> trace;
  if (!trace_path.empty()) {
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("--trace", "cannot open '" + trace_path + "'");
    trace = read_trace(in);
    spdlog::info("replaying {} packets from {}", trace->size(), trace_path);
  }
  auto flows = open_out(fs::path(a.out) / "flows.jsonl");
  RunOptions opt;
  opt.export_sink = &flows;
  if (trace) opt.trace = &*trace;
  spdlog::info("running '{}' seed={} scale={}", cfg.name, cfg.seed, cfg.scale_factor);
  const Metrics m = run_scenario(cfg, opt);
  flows.close();

  nlohmann::ordered_json doc;
  doc["config"] = scenario_to_json(cfg);
  doc["metrics"] = m.to_json();
  auto mf = open_out(fs::path(a.out) / "metrics.json");
  mf << doc.dump(2) << '\n';
  if (ticks_csv) {
    auto tf = open_out(fs::path(a.out) / "ticks.csv");
    m.write_ticks_csv(tf);
  }
  spdlog::info("generated={} host={} hw={} dropped={} exports={}", m.generated_packets,
               m.host_processed_packets, m.hw_handled_packets, m.dropped(), m.exports);
  std::cout << "drop_pct=" << m.drop_pct() << " cpu_load=" << m.mean_cpu_load
            << " host_frac=" << m.host_fraction() << " hw_frac=" << m.hw_fraction() << '\n';
  return 0;
}

int cmd_gen(const CommonArgs& a) {
  const ScenarioConfig cfg = load(a);
  fs::create_directories(a.out);
  const auto schedule = build_schedule(cfg);
  auto out = open_out(fs::path(a.out) / "trace.jsonl");
  PacketGenerator gen(schedule);
  std::vector<Packet> chunk;
  std::uint64_t n = 0;
  while (!gen.done()) {
    chunk.clear();
    while (!gen.done() && chunk.size() < 4096) chunk.push_back(gen.next());
    write_trace(chunk, out);
    n += chunk.size();
  }
  spdlog::info("wrote {} packets of {} flows", n, schedule.flows.size());
  std::cout << "packets=" << n << " flows=" << schedule.flows.size() << '\n';
  return 0;
}

int cmd_sweep(const CommonArgs& a, unsigned jobs) {
  SweepMatrix matrix = SweepMatrix::reference();
  if (!a.scenario.empty()) matrix.base = load_scenario(a.scenario);
  matrix.base = apply_overrides(matrix.base, a);
  if (a.offload) matrix.offload = {*a.offload == "on"};
  if (a.dpi) matrix.dpi = {*a.dpi == "on"};
  fs::create_directories(a.out);
  spdlog::info("sweeping {} cells", matrix.cell_count());
  const auto cells = bench_sweep(matrix, jobs);
  auto out = open_out(fs::path(a.out) / "sweep.csv");
  write_sweep_csv(cells, out);
  write_sweep_csv(cells, std::cout);
  return 0;
}

int cmd_compare(const CommonArgs& a) {
  const ScenarioConfig cfg = load(a);
  fs::create_directories(a.out);
  const auto report = compare_offload(cfg);
  auto out = open_out(fs::path(a.out) / "compare.csv");
  report.write_csv(out);
  report.write_csv(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"flowgate: hardware flow offload simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, gen_args, sweep_args, cmp_args;
  bool ticks_csv = false;
  std::string trace_path;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "Run one scenario; writes metrics.json and flows.jsonl");
  add_common(run, run_args, false);
  run->add_flag("--ticks", ticks_csv, "Also write the per-tick ticks.csv");
  run->add_option("--trace", trace_path, "Replay a trace file instead of generating traffic")
      ->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen", "Generate a trace file (trace.jsonl)");
  add_common(gen, gen_args, false);

  auto* sweep = app.add_subcommand("sweep", "Run the flows x DPI x offload matrix; writes sweep.csv");
  add_common(sweep, sweep_args, false);
  sweep->add_option("--jobs", jobs, "Cells to run concurrently")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Run a scenario with offload off and on; writes compare.csv");
  add_common(cmp, cmp_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(run_args, ticks_csv, trace_path);
    if (gen->parsed()) return cmd_gen(gen_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, jobs);
    if (cmp->parsed()) return cmd_compare(cmp_args);
  } catch (const InvariantViolation& e) {
    spdlog::critical("invariant violated: {}", e.what());
    std::cerr << "invariant violated: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
