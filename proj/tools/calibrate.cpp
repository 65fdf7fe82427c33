// Prints the host budget at which the DPI-on, offload-off 1M-flow analog of
// the reference sweep drops the requested fraction of packets.
#include <cstdlib>
#include <iostream>

#include "flowgate/bench.hpp"

int main(int argc, char** argv) {
  using namespace flowgate;
  const double target = argc > 1 ? std::atof(argv[1]) : 0.24;
  ScenarioConfig cfg = reference_base();
  cfg.active_flows = 1'000'000;
  cfg.new_flows_per_sec = 100'000;
  cfg.probe.dpi_enabled = true;
  cfg.probe.offload_enabled = false;
  const double budget = calibrate_budget(cfg, target);
  cfg.probe.host_budget_units_per_tick = budget;
  std::cout << "budget=" << budget << " drop_pct=" << run_scenario(cfg).drop_pct() << '\n';
}
