#pragma once

// JSON documents: correlator tables, pin lists and verdict reports. Parties
// are 1-based and settings 0-based in every document.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "npacert/analysis.hpp"

namespace npacert {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json table_to_json(const CorrelatorTable& table) {
  json moments = json::array();
  for (const auto& [key, mv] : table) {
    json m = key_json(key);
    m["value"] = mv.value;
    if (mv.sigma) m["sigma"] = *mv.sigma;
    moments.push_back(std::move(m));
  }
  return {{"schema_version", kSchemaVersion},
          {"scenario", scenario_json(table.scenario())},
          {"moments", moments}};
}

namespace detail {

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::SchemaError, where + ": " + what);
}

inline const json& require(const json& obj, const std::string& field, const std::string& where) {
  if (!obj.is_object()) schema_fail(where, "expected an object");
  auto it = obj.find(field);
  if (it == obj.end()) schema_fail(where, "missing field '" + field + "'");
  return *it;
}

inline int require_int(const json& obj, const std::string& field, const std::string& where) {
  const json& v = require(obj, field, where);
  if (!v.is_number_integer()) schema_fail(where + "." + field, "expected an integer");
  return v.get<int>();
}

inline void check_version(const json& doc) {
  const int version = require_int(doc, "schema_version", "document");
  if (version != kSchemaVersion)
    schema_fail("document.schema_version", "unsupported version " + std::to_string(version));
}

inline Scenario scenario_from_json(const json& doc) {
  const json& s = require(doc, "scenario", "document");
  const int outcomes = s.contains("outcomes") ? require_int(s, "outcomes", "scenario") : 2;
  try {
    return Scenario(require_int(s, "parties", "scenario"), require_int(s, "settings", "scenario"),
                    outcomes);
  } catch (const Error& e) {
    schema_fail("scenario", e.what());
  }
}

inline MomentKey key_from_json(const json& m, const Scenario& scenario, const std::string& where) {
  const json& parties = require(m, "parties", where);
  const json& settings = require(m, "settings", where);
  if (!parties.is_array() || !settings.is_array())
    schema_fail(where, "'parties' and 'settings' must be arrays");
  if (parties.size() != settings.size() || parties.empty())
    schema_fail(where, "'parties' and 'settings' must be non-empty and of equal length");
  std::vector<Letter> letters;
  for (std::size_t i = 0; i < parties.size(); ++i) {
    if (!parties[i].is_number_integer() || !settings[i].is_number_integer())
      schema_fail(where, "party and setting indices must be integers");
    const int p = parties[i].get<int>(), s = settings[i].get<int>();
    if (p < 1 || p > scenario.parties())
      schema_fail(where + ".parties[" + std::to_string(i) + "]",
                  "party " + std::to_string(p) + " outside 1.." + std::to_string(scenario.parties()));
    if (s < 0 || s >= scenario.settings())
      schema_fail(where + ".settings[" + std::to_string(i) + "]",
                  "setting " + std::to_string(s) + " outside 0.." +
                      std::to_string(scenario.settings() - 1));
    letters.push_back({p - 1, s});
  }
  try {
    return MomentKey(std::move(letters));
  } catch (const Error& e) {
    schema_fail(where, e.what());
  }
}

inline json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n');
    throw Error(ErrorKind::SchemaError,
                "line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace detail

/// Validates a correlator-table document. Range violations raise RangeError,
/// repeated keys DuplicateMoment, anything structural SchemaError.
inline CorrelatorTable ingest_table(const json& doc) {
  detail::check_version(doc);
  const Scenario scenario = detail::scenario_from_json(doc);
  const json& moments = detail::require(doc, "moments", "document");
  if (!moments.is_array()) detail::schema_fail("moments", "expected an array");
  CorrelatorTable table(scenario);
  for (std::size_t i = 0; i < moments.size(); ++i) {
    const std::string where = "moments[" + std::to_string(i) + "]";
    const json& m = moments[i];
    const MomentKey key = detail::key_from_json(m, scenario, where);
    const json& value = detail::require(m, "value", where);
    if (!value.is_number()) detail::schema_fail(where + ".value", "expected a number");
    std::optional<double> sigma;
    if (m.contains("sigma") && !m["sigma"].is_null()) {
      if (!m["sigma"].is_number()) detail::schema_fail(where + ".sigma", "expected a number");
      sigma = m["sigma"].get<double>();
    }
    try {
      table.insert(key, value.get<double>(), sigma);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
  return table;
}

inline CorrelatorTable ingest_table_text(std::string_view text) {
  return ingest_table(detail::parse_text(text));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  out << content;
}

/// Explicit pin list: {"schema_version": 1, "scenario": ..., "moments": [{"parties", "settings"}]}.
/// Values, when present, are ignored.
inline PinExplicit ingest_pin_list(const json& doc) {
  detail::check_version(doc);
  const Scenario scenario = detail::scenario_from_json(doc);
  const json& moments = detail::require(doc, "moments", "document");
  if (!moments.is_array()) detail::schema_fail("moments", "expected an array");
  PinExplicit pins;
  for (std::size_t i = 0; i < moments.size(); ++i)
    pins.keys.push_back(detail::key_from_json(moments[i], scenario, "moments[" + std::to_string(i) + "]"));
  return pins;
}

inline json policy_json(const PinPolicy& policy) {
  if (const auto* ex = std::get_if<PinExplicit>(&policy)) {
    json keys = json::array();
    for (const auto& k : ex->keys) keys.push_back(key_json(k));
    return {{"explicit", keys}};
  }
  return describe(policy);
}

inline json config_json(const SolverConfig& c, const AssembleOptions& a) {
  return {{"max_iters", c.max_iters},
          {"step_scale", c.step_scale},
          {"tol_cert", c.tol_cert},
          {"margin", c.margin},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"feasibility_tol", c.feasibility_tol},
          {"polish", c.polish},
          {"interval_k", a.interval_k ? json(*a.interval_k) : json(nullptr)}};
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Everything that depends only on the request and the correlator values.
/// Reports built from a simulated state and from its re-ingested table have
/// byte-identical bodies.
inline json report_body(const VerdictReport& r) {
  json pinned = json::array();
  for (const auto& p : r.pinned) {
    json m = key_json(p.key);
    m["label"] = p.key.label();
    m["value"] = p.value;
    if (p.sigma) m["sigma"] = *p.sigma;
    m["interval"] = p.interval;
    pinned.push_back(std::move(m));
  }
  json v_star = json::array();
  for (Eigen::Index k = 0; k < r.v_star.size(); ++k) v_star.push_back(r.v_star(k));

  json cert = nullptr;
  if (r.certificate) {
    cert = {{"value", r.certificate->value},
            {"bound", r.certificate_check ? json(r.certificate_check->bound) : json(nullptr)},
            {"verified", r.certificate_check && r.certificate_check->valid},
            {"z", matrix_json(r.certificate->z)}};
  }
  return {{"verdict", to_string(r.verdict)},
          {"status", to_string(r.status)},
          {"lambda_star", r.lambda_star},
          {"iterations", r.iterations},
          {"scenario", scenario_json(r.scenario)},
          {"level", r.level},
          {"pin_policy", policy_json(r.policy)},
          {"config", config_json(r.config, r.assembly)},
          {"pinned_moments", pinned},
          {"variables", r.variable_labels},
          {"v_star", v_star},
          {"certificate", cert}};
}

inline json source_json(const Source& source) {
  if (const auto* sim = std::get_if<SimulatedSource>(&source)) {
    json s = {{"type", "simulated"},
              {"state", state_name(sim->state.kind)},
              {"suite", suite_name(sim->suite)},
              {"visibility", sim->visibility}};
    if (sim->state.kind == StateKind::Basis) s["bits"] = sim->state.bits;
    return s;
  }
  return {{"type", "table"}};
}

inline json report_to_json(const VerdictReport& r, const Source& source) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "verdict_report"},
          {"source", source_json(source)},
          {"wall_time_s", r.wall_time_s},
          {"body", report_body(r)}};
}

/// Re-derives the family from a serialized report (scenario, level, pinned
/// moments, interval setting) and checks the embedded certificate against it.
inline CertificateCheck recheck_report(const json& report) {
  detail::check_version(report);
  const json& body = detail::require(report, "body", "report");
  const Scenario scenario = detail::scenario_from_json(body);
  const int level = detail::require_int(body, "level", "body");
  const json& cert = detail::require(body, "certificate", "body");
  if (cert.is_null()) return {false, std::numeric_limits<double>::infinity(), "no certificate"};

  CorrelatorTable table(scenario);
  PinExplicit pins;
  const json& pinned = detail::require(body, "pinned_moments", "body");
  for (std::size_t i = 0; i < pinned.size(); ++i) {
    const std::string where = "pinned_moments[" + std::to_string(i) + "]";
    const MomentKey key = detail::key_from_json(pinned[i], scenario, where);
    std::optional<double> sigma;
    if (pinned[i].contains("sigma")) sigma = pinned[i]["sigma"].get<double>();
    table.insert(key, detail::require(pinned[i], "value", where).get<double>(), sigma);
    pins.keys.push_back(key);
  }
  AssembleOptions options;
  const json& config = detail::require(body, "config", "body");
  if (config.contains("interval_k") && !config["interval_k"].is_null())
    options.interval_k = config["interval_k"].get<double>();
  const double tol = detail::require(config, "tol_cert", "config").get<double>();

  const AffineMatrixFamily family = assemble(build_structure(scenario, level), table, pins, options);
  const json& zj = detail::require(cert, "z", "certificate");
  const auto n = static_cast<Eigen::Index>(zj.size());
  Eigen::MatrixXd z(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(zj[static_cast<std::size_t>(i)].size()) != n)
      detail::schema_fail("certificate.z", "matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j)
      z(i, j) = zj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return check_certificate(family, {z, detail::require(cert, "value", "certificate").get<double>()},
                           tol);
}

}  // namespace npacert
