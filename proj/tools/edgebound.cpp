#include "edgebound/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitViolation = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("EDGEBOUND_OUT")) return env;
  return ".";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw edgebound::ConfigError("cannot create output directory: " + dir);
}

int cmd_bounds(const std::string& scenario_path, const std::string& out_dir, bool general) {
  using namespace edgebound;
  Scenario s = load_scenario(scenario_path);
  const AdmissionReport adm = validate_scenario(s);
  const BoundReport report = scenario_bounds(s, !general);

  std::cout << bound_report_table(report);
  for (const auto& reason : adm.reasons) std::cout << "  ! " << reason << "\n";

  ensure_dir(out_dir);
  json j = bound_report_to_json(report);
  j["flow_admission"] = json{{"admitted", adm.admitted}, {"reasons", adm.reasons}};
  std::ofstream out(out_dir + "/bounds.json");
  out << j.dump(2) << "\n";
  std::cout << "report written to " << out_dir << "/bounds.json\n";

  if (!report.admitted || !adm.admitted) {
    std::cout << "admission rejected\n";
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, std::optional<std::int64_t> horizon,
                 std::optional<std::uint64_t> seed, const std::string& out_dir) {
  using namespace edgebound;
  Scenario s = load_scenario(scenario_path);
  if (seed) s.run.seed = *seed;
  const AdmissionReport adm = validate_scenario(s);
  if (!adm.admitted) {
    std::cerr << "admission rejected:\n";
    for (const auto& reason : adm.reasons) std::cerr << "  " << reason << "\n";
    return kExitViolation;
  }

  Simulation sim(s);
  const RunResult result =
      sim.run(horizon ? std::optional<Tick>(Tick(*horizon)) : std::nullopt);

  ensure_dir(out_dir);
  write_trace_csv(result.trace, out_dir + "/trace.csv");
  write_packets_csv(result.packets, out_dir + "/packets.csv");

  const BoundReport* bounds_ptr = nullptr;
  BoundReport bounds;
  if (s.K > 0) {
    bounds = scenario_bounds(s);
    bounds_ptr = &bounds;
  }
  const json summary = build_summary(s, result, bounds_ptr);
  {
    std::ofstream out(out_dir + "/summary.json");
    out << summary.dump(2) << "\n";
  }

  std::cout << "delivered " << result.delivered() << "/" << result.packets.size()
            << " packets over " << result.horizon.v << " ticks\n"
            << "outputs: " << out_dir << "/trace.csv, packets.csv, summary.json\n";

  if (summary.contains("delay_violations") && summary["delay_violations"].get<std::int64_t>() > 0) {
    std::cout << "delay bound violations: " << summary["delay_violations"] << "\n";
    return kExitViolation;
  }
  if (summary.contains("bi_ok") && !summary["bi_ok"].get<bool>()) {
    std::cout << "backlog ceiling exceeded\n";
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_verify(const std::string& trace_path, std::int64_t window, std::int64_t budget,
               std::optional<int> flow, bool identities, std::int64_t propagation) {
  using namespace edgebound;
  const EventTrace trace = read_trace_csv(trace_path);
  TraceAnalyzer analyzer(trace);
  bool ok = true;

  std::vector<int> flows;
  if (flow) {
    flows.push_back(*flow);
  } else {
    std::set<int> seen;
    for (const auto& r : trace.records) seen.insert(r.flow_id);
    flows.assign(seen.begin(), seen.end());
  }

  for (int f : flows) {
    const auto wm =
        analyzer.sliding_window_max(Tick(window), Scope::at_stage(1).with_flow(f));
    const bool pass = wm.value <= Bits(budget);
    ok = ok && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " flow " << f << ": max " << wm.value.v
              << " bits in any " << window << "-tick window (budget " << budget
              << ", witness t=" << wm.witness.v << ")\n";
  }

  if (identities) {
    const IdentityReport rep =
        verify_identities(trace, {Tick(window)}, 128, Tick(propagation));
    std::cout << (rep.ok ? "PASS" : "FAIL") << " conservation identities (" << rep.checks
              << " checks)\n";
    for (const auto& issue : rep.issues) std::cout << "  " << issue << "\n";
    ok = ok && rep.ok;
  }
  return ok ? kExitOk : kExitViolation;
}

int cmd_experiment(const std::string& suite, int seed_count, const std::string& out_dir) {
  using namespace edgebound;
  ensure_dir(out_dir);
  const SuiteResult result = run_suite(suite, default_seeds(seed_count), out_dir);

  for (const auto& note : result.notes) std::cout << note << "\n";
  for (const auto& o : result.outcomes)
    if (!o.ok) std::cout << "violation (seed " << o.seed << "): " << o.detail << "\n";
  std::cout << result.suite << ": " << result.runs - result.violations << "/" << result.runs
            << " runs clean\n";

  std::ofstream out(out_dir + "/" + suite + "_summary.json");
  out << suite_to_json(result).dump(2) << "\n";
  std::cout << "summary written to " << out_dir << "/" << suite << "_summary.json\n";
  return result.ok() ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgebound: edge-shaped bounded-delay network simulator and bound calculator"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path;
  std::string out_dir = default_out_dir();
  std::string suite;
  bool general = false, identities = false;
  std::optional<std::int64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<int> flow;
  std::int64_t window = 0, budget = 0, propagation = 0;
  int seed_count = 100;

  auto* bounds = app.add_subcommand("bounds", "compute per-class delay bounds and admission");
  bounds->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  bounds->add_option("--out", out_dir, "output directory");
  bounds->add_flag("--general", general, "use the unrestricted-window delta form (conjectured)");

  auto* simulate = app.add_subcommand("simulate", "run one deterministic simulation");
  simulate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  simulate->add_option("--horizon", horizon, "override run duration in ticks");
  simulate->add_option("--seed", seed, "override the scenario seed");
  simulate->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "check a trace against a window budget");
  verify->add_option("--trace", trace_path, "trace.csv produced by simulate")->required();
  verify->add_option("--window", window, "window length in ticks")->required();
  verify->add_option("--budget", budget, "bit budget per window")->required();
  verify->add_option("--flow", flow, "restrict the check to one flow");
  verify->add_flag("--identities", identities, "also check conservation identities");
  verify->add_option("--propagation", propagation, "uniform per-link propagation in ticks");

  auto* experiment = app.add_subcommand("experiment", "run a verification campaign");
  experiment
      ->add_option("--suite", suite,
                   "fig4 | starvation | single-class-bound | multi-class-bound | utilization")
      ->required();
  experiment->add_option("--seeds", seed_count, "number of seeds (bound suites)");
  experiment->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bounds->parsed()) return cmd_bounds(scenario_path, out_dir, general);
    if (simulate->parsed()) return cmd_simulate(scenario_path, horizon, seed, out_dir);
    if (verify->parsed())
      return cmd_verify(trace_path, window, budget, flow, identities, propagation);
    if (experiment->parsed()) return cmd_experiment(suite, seed_count, out_dir);
  } catch (const edgebound::InfeasibleBoundError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitViolation;
  } catch (const edgebound::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const edgebound::TraceError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
