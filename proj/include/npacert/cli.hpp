#pragma once

// Command-line front end. Exit codes: 0 success / INCONCLUSIVE, 2 NONLOCAL
// (certified), 1 any error.

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npacert/io.hpp"

namespace npacert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNonlocal = 2;

inline StateSpec parse_state(const std::string& text) {
  if (text == "w") return {StateKind::W, {}};
  if (text == "ghz") return {StateKind::GHZ, {}};
  if (text == "graph-linear") return {StateKind::GraphLinear, {}};
  if (text == "graph-loop") return {StateKind::GraphLoop, {}};
  if (text == "mixed") return {StateKind::MaximallyMixed, {}};
  if (text.rfind("basis:", 0) == 0) return {StateKind::Basis, text.substr(6)};
  throw Error(ErrorKind::InvalidArgument, "unknown state '" + text + "'");
}

inline SuiteKind parse_suite(const std::string& text) {
  if (text == "w") return SuiteKind::W;
  if (text == "ghz") return SuiteKind::GHZ;
  if (text == "graph") return SuiteKind::Graph;
  throw Error(ErrorKind::InvalidArgument, "unknown suite '" + text + "'");
}

inline PinPolicy parse_pin(const std::string& text) {
  if (text == "all") return PinAll{};
  if (text.rfind("max-bodies:", 0) == 0) {
    const std::string k = text.substr(11);
    int bodies = 0;
    try {
      std::size_t used = 0;
      bodies = std::stoi(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad --pin max-bodies count '" + k + "'");
    }
    if (bodies < 1) throw Error(ErrorKind::InvalidArgument, "--pin max-bodies count must be >= 1");
    return PinMaxBodies{bodies};
  }
  if (text.rfind("explicit:", 0) == 0)
    return ingest_pin_list(detail::parse_text(read_file(text.substr(9))));
  throw Error(ErrorKind::InvalidArgument, "unknown pin policy '" + text + "'");
}

namespace detail {

struct Common {
  std::string state = "w";
  std::string suite = "w";
  int parties = 3;
  int settings = 0;  // 0: take the suite's setting count
  int level = 2;
  std::string pin = "all";
  double visibility = 1.0;
  std::uint64_t seed = 0;
  int max_iters = SolverConfig{}.max_iters;
  int restarts = SolverConfig{}.restarts;
  double margin = SolverConfig{}.margin;
  double interval_k = -1.0;
  std::string out;
};

inline void add_scenario_flags(CLI::App* app, Common& c) {
  app->add_option("--parties", c.parties, "number of parties (qubits)")->check(CLI::Range(1, 12));
  app->add_option("--settings", c.settings, "settings per party (default: the suite's count)")
      ->check(CLI::Range(1, 32));
  app->add_option("--level", c.level, "hierarchy level")->check(CLI::Range(1, 8));
}

inline void add_source_flags(CLI::App* app, Common& c) {
  app->add_option("--state", c.state, "w | ghz | graph-linear | graph-loop | mixed | basis:<bits>");
  app->add_option("--suite", c.suite, "w | ghz | graph");
  app->add_option("--noise,--visibility", c.visibility,
                  "white-noise visibility p: p*rho + (1-p)*I/2^n (1 = pure state)")
      ->check(CLI::Range(0.0, 1.0));
}

inline void add_solver_flags(CLI::App* app, Common& c) {
  app->add_option("--pin", c.pin, "all | max-bodies:<k> | explicit:<file>");
  app->add_option("--seed", c.seed, "restart seed");
  app->add_option("--max-iters", c.max_iters, "supergradient iterations per restart")
      ->check(CLI::Range(1, 10000000));
  app->add_option("--restarts", c.restarts, "supergradient restarts")->check(CLI::Range(1, 1000));
  app->add_option("--margin", c.margin, "decision margin for certified infeasibility")
      ->check(CLI::Range(1e-6, 1.0));
  app->add_option("--interval", c.interval_k,
                  "pin moments with sigma to value +- k*sigma instead of a point")
      ->check(CLI::Range(0.0, 1e6));
}

inline Scenario scenario_for(const Common& c) {
  const int settings = c.settings > 0 ? c.settings : standard_suite(parse_suite(c.suite)).settings();
  return Scenario(c.parties, settings);
}

inline SolverConfig solver_for(const Common& c) {
  SolverConfig s;
  s.seed = c.seed;
  s.max_iters = c.max_iters;
  s.restarts = c.restarts;
  s.margin = c.margin;
  s.validate();
  return s;
}

inline std::string fmt(double x) {
  std::ostringstream ss;
  ss << std::setprecision(6) << x;
  return ss.str();
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify non-local correlations with the commuting moment-matrix hierarchy",
               "npacert"};
  app.require_subcommand(1);

  detail::Common c;
  std::string table_path, ingest_path, dump_path;
  double tolerance = 1e-2;

  CLI::App* structure = app.add_subcommand("structure", "build and describe a moment matrix");
  detail::add_scenario_flags(structure, c);
  structure->add_option("--out", c.out, "write the structure document here");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "decide NONLOCAL / INCONCLUSIVE");
  detail::add_scenario_flags(analyze_cmd, c);
  detail::add_source_flags(analyze_cmd, c);
  detail::add_solver_flags(analyze_cmd, c);
  analyze_cmd->add_option("--from-table", table_path, "analyze a correlator-table document");
  analyze_cmd->add_option("--out", c.out, "write the verdict report here");

  CLI::App* ingest_cmd = app.add_subcommand("ingest", "validate a correlator-table document");
  ingest_cmd->add_option("file", ingest_path, "table document")->required();
  ingest_cmd->add_option("--out", c.out, "write the normalized table here");

  CLI::App* robust_cmd = app.add_subcommand("robustness", "bisect the critical white-noise visibility");
  detail::add_scenario_flags(robust_cmd, c);
  detail::add_source_flags(robust_cmd, c);
  detail::add_solver_flags(robust_cmd, c);
  robust_cmd->add_option("--tol", tolerance, "bracket width")->check(CLI::Range(1e-6, 0.5));
  robust_cmd->add_option("--out", c.out, "write the result document here");

  CLI::App* states_cmd = app.add_subcommand("states", "simulate correlators for a state");
  detail::add_scenario_flags(states_cmd, c);
  detail::add_source_flags(states_cmd, c);
  states_cmd->add_option("--dump", dump_path, "write the correlator table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  }

  try {
    if (structure->parsed()) {
      const MomentMatrixStructure s = build_structure(Scenario(c.parties, c.settings > 0 ? c.settings : 2), c.level);
      out << "scenario (" << s.scenario().parties() << "," << s.scenario().settings()
          << ",2) level " << s.level() << ": dim " << s.dim() << ", " << s.observables().size()
          << " observable moments, " << s.freevars().size() << " free variables\n";
      out << "basis:";
      for (const auto& w : s.basis()) out << ' ' << w.label();
      out << '\n';
      if (!c.out.empty()) write_file(c.out, structure_report(s).dump(2) + "\n");
      return kExitOk;
    }

    if (ingest_cmd->parsed()) {
      const CorrelatorTable table = ingest_table_text(read_file(ingest_path));
      out << "ok: " << table.size() << " moments, scenario (" << table.scenario().parties() << ","
          << table.scenario().settings() << ",2)\n";
      if (!c.out.empty()) write_file(c.out, table_to_json(table).dump(2) + "\n");
      return kExitOk;
    }

    if (states_cmd->parsed()) {
      const Scenario scenario = detail::scenario_for(c);
      const MomentMatrixStructure s = build_structure(scenario, c.level);
      const SimulatedSource source{parse_state(c.state), parse_suite(c.suite), c.visibility};
      const CorrelatorTable table = simulate_table(source, s);
      for (const auto& [key, mv] : table)
        out << std::left << std::setw(10) << ("<" + key.label() + ">") << ' '
            << std::showpos << std::fixed << std::setprecision(6) << mv.value << std::noshowpos
            << std::defaultfloat << '\n';
      if (!dump_path.empty()) write_file(dump_path, table_to_json(table).dump(2) + "\n");
      return kExitOk;
    }

    if (analyze_cmd->parsed()) {
      AnalysisRequest request;
      if (!table_path.empty()) {
        CorrelatorTable table = ingest_table_text(read_file(table_path));
        request.scenario = table.scenario();
        request.source = MeasuredSource{std::move(table)};
      } else {
        request.scenario = detail::scenario_for(c);
        request.source = SimulatedSource{parse_state(c.state), parse_suite(c.suite), c.visibility};
      }
      request.level = c.level;
      request.policy = parse_pin(c.pin);
      request.solver = detail::solver_for(c);
      if (c.interval_k >= 0.0) request.assembly.interval_k = c.interval_k;

      const VerdictReport report = analyze(request);
      out << to_string(report.verdict) << " (" << to_string(report.status) << ")\n"
          << "  lambda_star       " << detail::fmt(report.lambda_star) << '\n';
      if (report.certificate) {
        out << "  certificate value " << detail::fmt(report.certificate->value) << " bound "
            << detail::fmt(report.certificate_check->bound) << " verified "
            << (report.certificate_check->valid ? "yes" : "no") << '\n';
      }
      out << "  pinned moments    " << report.pinned.size() << ", variables "
          << report.variable_labels.size() << '\n'
          << "  wall time         " << detail::fmt(report.wall_time_s) << " s\n";
      if (!c.out.empty()) write_file(c.out, report_to_json(report, request.source).dump(2) + "\n");
      return report.verdict == Verdict::Nonlocal ? kExitNonlocal : kExitOk;
    }

    if (robust_cmd->parsed()) {
      RobustnessRequest request;
      request.state = parse_state(c.state);
      request.suite = parse_suite(c.suite);
      request.scenario = detail::scenario_for(c);
      request.level = c.level;
      request.policy = parse_pin(c.pin);
      request.tolerance = tolerance;
      request.solver = detail::solver_for(c);
      const RobustnessResult r = robustness(request);
      out << "p* = " << detail::fmt(r.p_star) << "  bracket [" << detail::fmt(r.lower) << ", "
          << detail::fmt(r.upper) << "]  (" << r.probes.size() << " probes)\n";
      if (!c.out.empty()) {
        json probes = json::array();
        for (const auto& [p, v] : r.probes) probes.push_back({{"visibility", p}, {"verdict", to_string(v)}});
        const json doc = {{"schema_version", kSchemaVersion},
                          {"kind", "robustness"},
                          {"state", state_name(request.state.kind)},
                          {"suite", suite_name(request.suite)},
                          {"p_star", r.p_star},
                          {"bracket", {r.lower, r.upper}},
                          {"probes", probes}};
        write_file(c.out, doc.dump(2) + "\n");
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  err << app.help();
  return kExitError;
}

}  // namespace npacert::cli
