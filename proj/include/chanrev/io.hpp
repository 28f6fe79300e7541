#pragma once

// JSON problem files and report serialization, schema "chanrev/1".
// Complex entries are [re, im]; matrices are row-major with explicit dims.

#include "chanrev/channel.hpp"
#include "chanrev/reversibility.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace chanrev::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "chanrev/1";

/// +inf and -inf become strings, NaN becomes null.
inline Json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline double parse_number(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorKind::ParseError, what + ": expected a number");
}

inline Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const Json& j, const std::string& what = "matrix") {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw Error(ErrorKind::ParseError, what + ": needs rows, cols and data");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw Error(ErrorKind::ParseError, what + ": rows and cols must be integers");
  const auto rows = j["rows"].get<Eigen::Index>();
  const auto cols = j["cols"].get<Eigen::Index>();
  const Json& data = j["data"];
  if (rows <= 0 || cols <= 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw Error(ErrorKind::ParseError, what + ": data must hold rows * cols entries");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& e = data[static_cast<std::size_t>(i * cols + k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw Error(ErrorKind::ParseError, what + ": entries must be [re, im] pairs");
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

struct ChannelRecord {
  std::string kind;  // kraus | choi | super
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  std::vector<Matrix> operators;  // kraus
  Matrix matrix;                  // choi or super

  Channel build() const {
    if (kind == "kraus") {
      require(!operators.empty(), ErrorKind::ParseError, "kraus channel needs operators");
      const Channel c = Channel::from_kraus(operators);
      require(c.in_dim() == in_dim && c.out_dim() == out_dim, ErrorKind::DimensionMismatch,
              "kraus operators do not match in_dim/out_dim");
      return c;
    }
    if (kind == "choi") return Channel::from_choi(matrix, in_dim, out_dim);
    if (kind == "super") {
      require(matrix.rows() == out_dim * out_dim && matrix.cols() == in_dim * in_dim, ErrorKind::DimensionMismatch,
              "superoperator must be out^2 x in^2");
      return Channel::from_super(matrix, in_dim, out_dim);
    }
    throw Error(ErrorKind::ParseError, "unknown channel kind '" + kind + "'");
  }
};

inline ChannelRecord record_super(const Channel& c) {
  return {"super", c.in_dim(), c.out_dim(), {}, c.super()};
}

inline Json channel_to_json(const ChannelRecord& c) {
  Json j{{"kind", c.kind}, {"in_dim", c.in_dim}, {"out_dim", c.out_dim}};
  if (c.kind == "kraus") {
    Json ops = Json::array();
    for (const auto& k : c.operators) ops.push_back(matrix_to_json(k));
    j["operators"] = std::move(ops);
  } else {
    j["matrix"] = matrix_to_json(c.matrix);
  }
  return j;
}

inline ChannelRecord channel_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error(ErrorKind::ParseError, "channel: needs a kind");
  ChannelRecord c;
  c.kind = j["kind"].get<std::string>();
  if (!j.contains("in_dim") || !j.contains("out_dim") || !j["in_dim"].is_number_integer() ||
      !j["out_dim"].is_number_integer())
    throw Error(ErrorKind::ParseError, "channel: needs integer in_dim and out_dim");
  c.in_dim = j["in_dim"].get<Eigen::Index>();
  c.out_dim = j["out_dim"].get<Eigen::Index>();
  if (c.kind == "kraus") {
    if (!j.contains("operators") || !j["operators"].is_array())
      throw Error(ErrorKind::ParseError, "channel: kraus needs operators");
    for (const auto& op : j["operators"]) c.operators.push_back(matrix_from_json(op, "kraus operator"));
  } else if (c.kind == "choi" || c.kind == "super") {
    if (!j.contains("matrix")) throw Error(ErrorKind::ParseError, "channel: " + c.kind + " needs matrix");
    c.matrix = matrix_from_json(j["matrix"], c.kind + " matrix");
  } else {
    throw Error(ErrorKind::ParseError, "channel: unknown kind '" + c.kind + "'");
  }
  return c;
}

/// Options recorded in a problem file; unset fields keep library defaults.
struct ProblemOptions {
  std::optional<double> hold_rel;
  std::optional<double> fail_rel;
  std::optional<int> n_max;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<bool> include_fisher;
  std::optional<std::vector<double>> t_grid;
  std::optional<std::vector<double>> power_s;
  std::optional<std::vector<double>> hoeffding_r;

  bool operator==(const ProblemOptions&) const = default;

  void apply(CheckOptions& o) const {
    if (hold_rel) o.hold_rel = *hold_rel;
    if (fail_rel) o.fail_rel = *fail_rel;
    if (n_max) o.n_max = *n_max;
    if (seed) o.seed = *seed;
    if (samples) o.samples = *samples;
    if (include_fisher) o.include_fisher = *include_fisher;
    if (t_grid) o.t_grid = o.family_s_grid = *t_grid;
    if (power_s) o.power_s = *power_s;
    if (hoeffding_r) o.hoeffding_r = *hoeffding_r;
  }
};

struct Problem {
  std::string version = kSchema;
  std::map<std::string, Matrix> states;
  std::string reference = "rho";
  /// Empty means every state except the reference, in name order.
  std::vector<std::string> family;
  std::optional<ChannelRecord> channel;
  ProblemOptions options;

  std::vector<std::string> family_names() const {
    if (!family.empty()) return family;
    std::vector<std::string> out;
    for (const auto& [name, m] : states)
      if (name != reference) out.push_back(name);
    return out;
  }

  DensityOperator state(const std::string& name) const {
    const auto it = states.find(name);
    require(it != states.end(), ErrorKind::ParseError, "unknown state '" + name + "'");
    return DensityOperator(it->second, 1e-8);
  }

  Channel build_channel() const {
    require(channel.has_value(), ErrorKind::ParseError, "the problem has no channel");
    return channel->build();
  }
};

inline Json problem_to_json(const Problem& p) {
  Json j{{"version", p.version}};
  Json states = Json::object();
  for (const auto& [name, m] : p.states) states[name] = matrix_to_json(m);
  j["states"] = std::move(states);
  j["reference"] = p.reference;
  if (!p.family.empty()) j["family"] = p.family;
  if (p.channel) j["channel"] = channel_to_json(*p.channel);
  Json o = Json::object();
  const auto& po = p.options;
  if (po.hold_rel) o["hold_rel"] = *po.hold_rel;
  if (po.fail_rel) o["fail_rel"] = *po.fail_rel;
  if (po.n_max) o["n_max"] = *po.n_max;
  if (po.seed) o["seed"] = *po.seed;
  if (po.samples) o["samples"] = *po.samples;
  if (po.include_fisher) o["include_fisher"] = *po.include_fisher;
  if (po.t_grid) o["t_grid"] = *po.t_grid;
  if (po.power_s) o["power_s"] = *po.power_s;
  if (po.hoeffding_r) o["hoeffding_r"] = *po.hoeffding_r;
  if (!o.empty()) j["options"] = std::move(o);
  return j;
}

inline Problem problem_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "problem must be a JSON object");
  Problem p;
  if (!j.contains("version") || j["version"] != kSchema)
    throw Error(ErrorKind::ParseError, std::string("version must be \"") + kSchema + "\"");
  if (!j.contains("states") || !j["states"].is_object() || j["states"].empty())
    throw Error(ErrorKind::ParseError, "states must be a nonempty object");
  for (const auto& [name, m] : j["states"].items()) p.states[name] = matrix_from_json(m, "state " + name);
  if (j.contains("reference")) {
    if (!j["reference"].is_string()) throw Error(ErrorKind::ParseError, "reference must be a string");
    p.reference = j["reference"].get<std::string>();
  }
  if (!p.states.count(p.reference)) throw Error(ErrorKind::ParseError, "reference state '" + p.reference + "' missing");
  if (j.contains("family")) {
    if (!j["family"].is_array()) throw Error(ErrorKind::ParseError, "family must be an array of names");
    for (const auto& n : j["family"]) {
      if (!n.is_string() || !p.states.count(n.get<std::string>()))
        throw Error(ErrorKind::ParseError, "family names must refer to states");
      p.family.push_back(n.get<std::string>());
    }
  }
  if (j.contains("channel")) p.channel = channel_from_json(j["channel"]);
  if (j.contains("options")) {
    const Json& o = j["options"];
    if (!o.is_object()) throw Error(ErrorKind::ParseError, "options must be an object");
    auto& po = p.options;
    try {
      if (o.contains("hold_rel")) po.hold_rel = o["hold_rel"].get<double>();
      if (o.contains("fail_rel")) po.fail_rel = o["fail_rel"].get<double>();
      if (o.contains("n_max")) po.n_max = o["n_max"].get<int>();
      if (o.contains("seed")) po.seed = o["seed"].get<std::uint64_t>();
      if (o.contains("samples")) po.samples = o["samples"].get<int>();
      if (o.contains("include_fisher")) po.include_fisher = o["include_fisher"].get<bool>();
      if (o.contains("t_grid")) po.t_grid = o["t_grid"].get<std::vector<double>>();
      if (o.contains("power_s")) po.power_s = o["power_s"].get<std::vector<double>>();
      if (o.contains("hoeffding_r")) po.hoeffding_r = o["hoeffding_r"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("options: ") + e.what());
    }
  }
  return p;
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  return problem_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports

inline Json positivity_to_json(const PositivityReport& r) {
  return Json{{"completely_positive", r.completely_positive},
              {"choi_min_eigenvalue", number(r.choi_min_eigenvalue)},
              {"two_positive", r.two_positive},
              {"two_positive_exact", r.two_positive_exact},
              {"positive_sampled", r.positive_sampled},
              {"adjoint_schwarz_sampled", r.schwarz_sampled},
              {"adjoint_schwarz_worst", number(r.schwarz_worst)},
              {"trace_preserving", r.trace_preserving},
              {"adjoint_unital", r.adjoint_unital},
              {"faithful_adjoint", r.faithful_adjoint}};
}

inline Json report_to_json(const ReversibilityReport& r, const std::vector<std::string>& names = {}) {
  Json conds = Json::array();
  for (const auto& c : r.conditions) {
    Json per = Json::array();
    for (double v : c.per_sigma) per.push_back(number(v));
    conds.push_back(Json{{"id", c.id},
                         {"description", c.description},
                         {"residual", number(c.residual)},
                         {"relative", number(c.relative)},
                         {"verdict", std::string(to_string(c.verdict))},
                         {"evaluated", c.evaluated},
                         {"per_sigma", std::move(per)}});
  }
  Json j{{"version", kSchema}, {"overall", std::string(to_string(r.overall))}, {"consistent", r.consistent}};
  if (!names.empty()) j["family"] = names;
  j["conditions"] = std::move(conds);
  j["notes"] = r.notes;
  j["standing"] = Json{{"positivity", positivity_to_json(r.standing.positivity)},
                       {"petz_dual_schwarz_sampled", r.standing.petz_dual_schwarz_sampled},
                       {"petz_dual_schwarz_worst", number(r.standing.petz_dual_schwarz_worst)},
                       {"rho_invertible", r.standing.rho_invertible},
                       {"image_invertible", r.standing.image_invertible},
                       {"compressed", r.standing.compressed},
                       {"working_in_dim", r.standing.working_in_dim},
                       {"working_out_dim", r.standing.working_out_dim}};
  const auto& d = r.diagnostics;
  j["diagnostics"] = Json{{"functoriality", number(d.functoriality)},
                          {"petz_independence", number(d.petz_independence)},
                          {"multiplicative_domain", number(d.multiplicative_domain)},
                          {"multiplicative_domain_evaluated", d.multiplicative_domain_evaluated},
                          {"fixed_point_dim", d.fixed_point_dim},
                          {"fixed_point_tilde_dim", d.fixed_point_tilde_dim},
                          {"r0", number(d.r0)}};
  j["recovery"] = channel_to_json(record_super(r.recovery));
  if (r.factorization) {
    const auto& f = *r.factorization;
    Json s0 = Json::array();
    for (const auto& m : f.sigma0_A) s0.push_back(matrix_to_json(m));
    Json blocks = Json::array();
    for (auto [n, m] : f.blocks.blocks) blocks.push_back(Json::array({n, m}));
    j["factorization"] = Json{{"blocks", std::move(blocks)},
                              {"rho_A", matrix_to_json(f.rho_A)},
                              {"rho_B", matrix_to_json(f.rho_B)},
                              {"rho0_A", matrix_to_json(f.rho0_A)},
                              {"sigma0_A", std::move(s0)},
                              {"state_residual", f.state_residual},
                              {"image_residual", f.image_residual},
                              {"rho_residual", f.rho_residual},
                              {"rho0_residual", f.rho0_residual},
                              {"commutant_residual", f.commutant_residual},
                              {"recovery_choi_min", f.recovery_choi_min},
                              {"recovery_tp_residual", f.recovery_tp_residual}};
  } else {
    j["factorization"] = nullptr;
  }
  return j;
}

}  // namespace chanrev::io
