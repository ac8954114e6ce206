// SPDX-License-Identifier: Apache-2.0
#include "mgc/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace mgc::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Schema, path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) schema(path + "." + key, "unknown key");
}

const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) schema(path + "." + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema(path, "expected a finite number");
  return v;
}

double number_or(const json& j, const std::string& path, const char* key, double def) {
  return j.contains(key) ? number(j.at(key), path + "." + key) : def;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema(path, "expected an integer");
  return j.get<int>();
}

bool boolean_or(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) schema(path + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array");
  return j;
}

DGUnit parse_dg(const json& j, const std::string& path) {
  check_keys(j, path, {"R_t", "L_t", "C_t", "V_r", "load"});
  DGUnit u;
  u.params.R_t = number(need(j, path, "R_t"), path + ".R_t");
  u.params.L_t = number(need(j, path, "L_t"), path + ".L_t");
  u.params.C_t = number(need(j, path, "C_t"), path + ".C_t");
  u.params.V_r = number(need(j, path, "V_r"), path + ".V_r");
  if (j.contains("load")) {
    const std::string lp = path + ".load";
    const json& ld = j.at("load");
    check_keys(ld, lp, {"I_const", "Y_L", "P_star"});
    u.load.I_const = number_or(ld, lp, "I_const", 0.0);
    u.load.Y_L = number_or(ld, lp, "Y_L", 0.0);
    u.load.P_star = number_or(ld, lp, "P_star", 0.0);
  }
  return u;
}

MicrogridSpec parse_microgrid(const json& j) {
  const std::string path = "microgrid";
  check_keys(j, path, {"dgs", "lines"});
  MicrogridSpec spec;
  const json& dgs = array(need(j, path, "dgs"), path + ".dgs");
  for (std::size_t i = 0; i < dgs.size(); ++i)
    spec.dgs.push_back(parse_dg(dgs[i], path + ".dgs[" + std::to_string(i) + "]"));
  if (j.contains("lines")) {
    const json& lines = array(j.at("lines"), path + ".lines");
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const std::string lp = path + ".lines[" + std::to_string(l) + "]";
      check_keys(lines[l], lp, {"from", "to", "R", "L"});
      LineParams ln;
      ln.from_dg = integer(need(lines[l], lp, "from"), lp + ".from");
      ln.to_dg = integer(need(lines[l], lp, "to"), lp + ".to");
      ln.R = number(need(lines[l], lp, "R"), lp + ".R");
      ln.L = number(need(lines[l], lp, "L"), lp + ".L");
      spec.lines.push_back(ln);
    }
  }
  return spec;
}

std::optional<std::vector<double>> weights(const json& j, const std::string& path, int n) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") schema(path, "expected \"auto\" or an array");
    return std::nullopt;
  }
  array(j, path);
  if (static_cast<int>(j.size()) != n)
    schema(path, "expected " + std::to_string(n) + " entries");
  std::vector<double> w;
  for (std::size_t k = 0; k < j.size(); ++k) {
    w.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
    if (!(w.back() > 0.0)) schema(path + "[" + std::to_string(k) + "]", "must be > 0");
  }
  return w;
}

void require(bool ok, const std::string& path, const char* what) {
  if (!ok) schema(path, what);
}

SynthesisConfig parse_synthesis(const json& j, const MicrogridSpec& spec) {
  const std::string path = "synthesis";
  check_keys(j, path,
             {"p", "p_bar", "gamma_bar", "c0", "c_offdiag", "mode", "prune_threshold", "scaling",
              "integrator_scale", "time_scale", "rho_tilde_fraction", "line_rho_margin",
              "line_nu_fraction", "retries"});
  SynthesisConfig c;
  if (j.contains("p")) c.p = weights(j.at("p"), path + ".p", static_cast<int>(spec.dgs.size()));
  if (j.contains("p_bar"))
    c.p_bar = weights(j.at("p_bar"), path + ".p_bar", static_cast<int>(spec.lines.size()));
  c.gamma_bar = number_or(j, path, "gamma_bar", c.gamma_bar);
  require(c.gamma_bar > 0.0, path + ".gamma_bar", "must be > 0");
  c.c0 = number_or(j, path, "c0", c.c0);
  require(c.c0 >= 0.0, path + ".c0", "must be >= 0");
  c.c_offdiag = number_or(j, path, "c_offdiag", c.c_offdiag);
  require(c.c_offdiag >= 0.0, path + ".c_offdiag", "must be >= 0");
  c.prune_threshold = number_or(j, path, "prune_threshold", c.prune_threshold);
  require(c.prune_threshold >= 0.0 && c.prune_threshold < 1.0, path + ".prune_threshold",
          "must lie in [0, 1)");
  if (j.contains("mode")) {
    const json& m = j.at("mode");
    if (m == "rederived") c.mode = ConditionMode::Rederived;
    else if (m == "literal") c.mode = ConditionMode::Literal;
    else schema(path + ".mode", "expected \"rederived\" or \"literal\"");
  }
  if (j.contains("scaling")) {
    const json& m = j.at("scaling");
    if (m == "energy") c.scaling = ScalingMode::Energy;
    else if (m == "none") c.scaling = ScalingMode::None;
    else schema(path + ".scaling", "expected \"energy\" or \"none\"");
  }
  c.integrator_scale = number_or(j, path, "integrator_scale", c.integrator_scale);
  require(c.integrator_scale > 0.0, path + ".integrator_scale", "must be > 0");
  c.time_scale = number_or(j, path, "time_scale", c.time_scale);
  require(c.time_scale > 0.0, path + ".time_scale", "must be > 0");
  c.rho_tilde_fraction = number_or(j, path, "rho_tilde_fraction", c.rho_tilde_fraction);
  require(c.rho_tilde_fraction > 0.0 && c.rho_tilde_fraction < 1.0,
          path + ".rho_tilde_fraction", "must lie in (0, 1)");
  c.line_rho_margin = number_or(j, path, "line_rho_margin", c.line_rho_margin);
  require(c.line_rho_margin >= 1.0, path + ".line_rho_margin", "must be >= 1");
  c.line_nu_fraction = number_or(j, path, "line_nu_fraction", c.line_nu_fraction);
  require(c.line_nu_fraction > 0.0 && c.line_nu_fraction < 0.5, path + ".line_nu_fraction",
          "must lie in (0, 0.5)");
  if (j.contains("retries")) {
    c.retries = integer(j.at("retries"), path + ".retries");
    require(c.retries >= 0 && c.retries <= 16, path + ".retries", "must lie in [0, 16]");
  }
  return c;
}

DisturbanceKind disturbance_kind(const json& j, const std::string& path) {
  for (DisturbanceKind k : {DisturbanceKind::LoadStep, DisturbanceKind::ConductanceStep,
                            DisturbanceKind::ReferenceStep, DisturbanceKind::CplStep})
    if (j == to_string(k)) return k;
  schema(path, "expected load_step, conductance_step, reference_step or cpl_step");
}

Scenario parse_scenario(const json& j) {
  const std::string path = "scenario";
  check_keys(j, path,
             {"t_end", "dt", "initial", "disturbances", "pnp", "enable_cpl", "stability_substeps"});
  Scenario s;
  s.t_end = number_or(j, path, "t_end", s.t_end);
  s.dt = number_or(j, path, "dt", s.dt);
  if (j.contains("initial")) {
    const json& x = j.at("initial");
    if (x.is_string()) {
      if (x != "equilibrium") schema(path + ".initial", "expected \"equilibrium\" or an array");
    } else {
      array(x, path + ".initial");
      Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
      for (std::size_t k = 0; k < x.size(); ++k)
        v(static_cast<Eigen::Index>(k)) =
            number(x[k], path + ".initial[" + std::to_string(k) + "]");
      s.initial = v;
    }
  }
  if (j.contains("disturbances")) {
    const json& ds = array(j.at("disturbances"), path + ".disturbances");
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const std::string dp = path + ".disturbances[" + std::to_string(k) + "]";
      check_keys(ds[k], dp, {"time", "kind", "target", "value"});
      Disturbance d;
      d.time = number(need(ds[k], dp, "time"), dp + ".time");
      d.kind = disturbance_kind(need(ds[k], dp, "kind"), dp + ".kind");
      d.target = integer(need(ds[k], dp, "target"), dp + ".target");
      d.value = number(need(ds[k], dp, "value"), dp + ".value");
      s.disturbances.push_back(d);
    }
  }
  if (j.contains("pnp")) {
    const json& ps = array(j.at("pnp"), path + ".pnp");
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const std::string pp = path + ".pnp[" + std::to_string(k) + "]";
      const json& e = ps[k];
      if (!e.is_object()) schema(pp, "expected an object");
      const json& action = need(e, pp, "action");
      PnpEvent ev;
      if (action == "add_dg") {
        check_keys(e, pp, {"time", "action", "dg", "attach_to", "R", "L"});
        AddDG a;
        a.dg = parse_dg(need(e, pp, "dg"), pp + ".dg");
        a.attach_to = integer(need(e, pp, "attach_to"), pp + ".attach_to");
        a.R = number(need(e, pp, "R"), pp + ".R");
        a.L = number(need(e, pp, "L"), pp + ".L");
        ev.action = a;
      } else if (action == "remove_dg") {
        check_keys(e, pp, {"time", "action", "index"});
        ev.action = RemoveDG{integer(need(e, pp, "index"), pp + ".index")};
      } else {
        schema(pp + ".action", "expected \"add_dg\" or \"remove_dg\"");
      }
      ev.time = number(need(e, pp, "time"), pp + ".time");
      s.pnp.push_back(std::move(ev));
    }
  }
  s.enable_cpl = boolean_or(j, path, "enable_cpl", s.enable_cpl);
  s.stability_substeps = boolean_or(j, path, "stability_substeps", s.stability_substeps);
  validate_scenario(s);
  return s;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, const char* key) {
  if (!j.contains(key)) schema(key, "missing from bundle");
  const json& v = j.at(key);
  if (v.is_null()) return kNaN;
  if (!v.is_number()) schema(key, "expected a number in bundle");
  return v.get<double>();
}

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd get_matrix(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) schema(key, "missing matrix in bundle");
  const json& rows = j.at(key);
  if (rows.empty()) return Eigen::MatrixXd();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != m)
      schema(key, "ragged matrix in bundle");
    for (Eigen::Index c = 0; c < m; ++c) {
      const json& v = rows[r][c];
      out(r, c) = v.is_null() ? kNaN : v.get<double>();
    }
  }
  return out;
}

std::vector<double> get_vector(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) schema(key, "missing array in bundle");
  std::vector<double> out;
  for (const json& v : j.at(key)) out.push_back(v.is_null() ? kNaN : v.get<double>());
  return out;
}

json vector(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json dg_json(const DGUnit& u) {
  return {{"R_t", u.params.R_t},
          {"L_t", u.params.L_t},
          {"C_t", u.params.C_t},
          {"V_r", u.params.V_r},
          {"load", {{"I_const", u.load.I_const}, {"Y_L", u.load.Y_L}, {"P_star", u.load.P_star}}}};
}

}  // namespace

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("malformed JSON: ") + e.what());
  }
  try {
    check_keys(j, "config", {"microgrid", "synthesis", "scenario"});
    Config c;
    c.microgrid = parse_microgrid(need(j, "config", "microgrid"));
    if (j.contains("synthesis")) c.synthesis = parse_synthesis(j.at("synthesis"), c.microgrid);
    if (j.contains("scenario")) {
      c.scenario = parse_scenario(j.at("scenario"));
      c.has_scenario = true;
    }
    c.hash = config_hash(c.microgrid);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("invalid value: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

Config load_config(const std::string& path) { return parse_config(read_file(path)); }

json to_json(const MicrogridSpec& spec) {
  json dgs = json::array();
  for (const auto& u : spec.dgs) dgs.push_back(dg_json(u));
  json lines = json::array();
  for (const auto& l : spec.lines)
    lines.push_back({{"from", l.from_dg}, {"to", l.to_dg}, {"R", l.R}, {"L", l.L}});
  return {{"dgs", dgs}, {"lines", lines}};
}

json to_json(const SynthesisConfig& c) {
  return {{"p", c.p ? vector(*c.p) : json("auto")},
          {"p_bar", c.p_bar ? vector(*c.p_bar) : json("auto")},
          {"gamma_bar", c.gamma_bar},
          {"c0", c.c0},
          {"c_offdiag", c.c_offdiag},
          {"mode", to_string(c.mode)},
          {"prune_threshold", c.prune_threshold},
          {"scaling", to_string(c.scaling)},
          {"integrator_scale", c.integrator_scale},
          {"time_scale", c.time_scale},
          {"rho_tilde_fraction", c.rho_tilde_fraction},
          {"line_rho_margin", c.line_rho_margin},
          {"line_nu_fraction", c.line_nu_fraction},
          {"retries", c.retries}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return os.str();
}

std::string config_hash(const MicrogridSpec& spec) { return sha256_hex(to_json(spec).dump()); }

json bundle_to_json(const ValidatedModel& model, const ControllerSet& c,
                    const SynthesisConfig& config, const std::string& hash,
                    const std::string& config_name) {
  json dgs = json::array();
  for (std::size_t i = 0; i < c.dgs.size(); ++i) {
    const auto& r = c.dgs[i];
    dgs.push_back({{"index", i},
                   {"K_io", matrix(r.K_io)},
                   {"P", matrix(r.P)},
                   {"nu", num(r.indices.nu)},
                   {"rho", num(r.indices.rho)},
                   {"rho_tilde", num(r.indices.rho_tilde)},
                   {"gamma_i", num(r.indices.gamma_i)},
                   {"lmi_residual", num(r.lmi_residual)},
                   {"certificate_residual", num(r.certificate_residual)},
                   {"diagnostics", r.diagnostics}});
  }
  json lines = json::array();
  for (std::size_t l = 0; l < c.lines.size(); ++l) {
    const auto& r = c.lines[l];
    lines.push_back({{"index", l},
                     {"K_lo", num(r.K_lo)},
                     {"P", num(r.P)},
                     {"nu_bar", num(r.indices.nu)},
                     {"rho_bar", num(r.indices.rho)},
                     {"open_loop", r.open_loop},
                     {"lmi_residual", num(r.lmi_residual)},
                     {"certificate_residual", num(r.certificate_residual)},
                     {"diagnostics", r.diagnostics}});
  }
  json edges = json::array();
  for (const auto& e : c.topology) {
    const Eigen::RowVector3d k = c.k(e.to, e.from, model);
    edges.push_back({{"to", e.to}, {"from", e.from}, {"weight", num(e.weight)},
                     {"k", matrix(k)}, {"certificate_residual", num(c.global_residual)}});
  }
  json T = json::array();
  for (const auto& t : c.scaling.T) T.push_back(matrix(t));
  json discrepancies = json::array();
  for (const auto& d : c.discrepancies)
    discrepancies.push_back({{"condition", d.condition},
                             {"dg", d.dg},
                             {"line", d.line},
                             {"literal_bound", num(d.literal_bound)},
                             {"rederived_bound", num(d.rederived_bound)},
                             {"note", d.note}});
  const PassivityBudget& b = c.budget;
  return {{"format", kBundleFormat},
          {"config_hash", hash},
          {"manifest", {{"config", config_name}}},
          {"microgrid", {{"num_dgs", model.num_dgs()}, {"num_lines", model.num_lines()}}},
          {"synthesis", to_json(config)},
          {"controllers",
           {{"dgs", dgs},
            {"lines", lines},
            {"K", matrix(c.K)},
            {"Khat", matrix(c.Khat)},
            {"certificate_residual", num(c.global_residual)},
            {"topology", edges}}},
          {"certificate",
           {{"status", "feasible"},
            {"gamma_tilde", num(c.gamma_tilde)},
            {"global_residual", num(c.global_residual)},
            {"objective", num(c.global_objective)},
            {"attempts", c.attempts},
            {"p", vector(b.p)},
            {"p_bar", vector(b.p_bar)},
            {"gamma_bar", num(b.gamma_bar)},
            {"c0", num(b.c0)},
            {"c_offdiag", num(b.c_offdiag)}}},
          {"scaling", {{"T", T}, {"t", vector(c.scaling.t)}, {"omega", num(c.scaling.omega)}}},
          {"discrepancies", discrepancies},
          {"diagnostics", c.diagnostics}};
}

Bundle bundle_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kBundleFormat)
      schema("bundle", std::string("expected format ") + kBundleFormat);
    Bundle out;
    out.config_hash = j.at("config_hash").get<std::string>();
    out.num_dgs = j.at("microgrid").at("num_dgs").get<int>();
    out.num_lines = j.at("microgrid").at("num_lines").get<int>();
    ControllerSet& c = out.controllers;
    const json& ctl = j.at("controllers");
    for (const json& d : ctl.at("dgs")) {
      DGLocalResult r;
      r.K_io = get_matrix(d, "K_io");
      r.P = get_matrix(d, "P");
      r.indices = {get_num(d, "nu"), get_num(d, "rho"), get_num(d, "rho_tilde"),
                   get_num(d, "gamma_i")};
      r.lmi_residual = get_num(d, "lmi_residual");
      r.certificate_residual = get_num(d, "certificate_residual");
      r.diagnostics = d.value("diagnostics", "");
      c.dgs.push_back(r);
    }
    for (const json& d : ctl.at("lines")) {
      LineLocalResult r;
      r.K_lo = get_num(d, "K_lo");
      r.P = get_num(d, "P");
      r.indices = {get_num(d, "nu_bar"), get_num(d, "rho_bar")};
      r.open_loop = d.at("open_loop").get<bool>();
      r.lmi_residual = get_num(d, "lmi_residual");
      r.certificate_residual = get_num(d, "certificate_residual");
      r.diagnostics = d.value("diagnostics", "");
      c.lines.push_back(r);
    }
    c.K = get_matrix(ctl, "K");
    c.Khat = get_matrix(ctl, "Khat");
    for (const json& e : ctl.at("topology"))
      c.topology.push_back({e.at("to").get<int>(), e.at("from").get<int>(), get_num(e, "weight")});
    const json& cert = j.at("certificate");
    c.gamma_tilde = get_num(cert, "gamma_tilde");
    c.global_residual = get_num(cert, "global_residual");
    c.global_objective = get_num(cert, "objective");
    c.attempts = cert.at("attempts").get<int>();
    c.budget.p = get_vector(cert, "p");
    c.budget.p_bar = get_vector(cert, "p_bar");
    c.budget.gamma_bar = get_num(cert, "gamma_bar");
    c.budget.c0 = get_num(cert, "c0");
    c.budget.c_offdiag = get_num(cert, "c_offdiag");
    c.budget.gamma_tilde = c.gamma_tilde;
    for (const auto& r : c.dgs) c.budget.dg.push_back(r.indices);
    for (const auto& r : c.lines) c.budget.line.push_back(r.indices);
    const json& sc = j.at("scaling");
    for (const json& t : sc.at("T")) {
      json wrap = {{"T", t}};
      c.scaling.T.push_back(get_matrix(wrap, "T"));
    }
    c.scaling.t = get_vector(sc, "t");
    c.scaling.omega = get_num(sc, "omega");
    for (const json& d : j.at("discrepancies"))
      c.discrepancies.push_back({d.at("condition").get<std::string>(), d.at("dg").get<int>(),
                                 d.at("line").get<int>(), get_num(d, "literal_bound"),
                                 get_num(d, "rederived_bound"), d.at("note").get<std::string>()});
    c.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    if (static_cast<int>(c.dgs.size()) != out.num_dgs ||
        static_cast<int>(c.lines.size()) != out.num_lines ||
        c.K.rows() != 3 * out.num_dgs || c.K.cols() != 3 * out.num_dgs)
      schema("bundle", "controller dimensions disagree with the microgrid size");
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed bundle: ") + e.what());
  }
}

Bundle load_bundle(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("malformed bundle JSON: ") + e.what());
  }
  return bundle_from_json(j);
}

json metrics_to_json(const Metrics& m, const SimTrace& trace, double gamma_tilde) {
  json dgs = json::array();
  for (std::size_t i = 0; i < m.dgs.size(); ++i)
    dgs.push_back({{"name", m.dgs[i]},
                   {"final_error", num(m.final_error[i])},
                   {"settling_time", num(m.settling_time[i])},
                   {"overshoot", num(m.overshoot[i])},
                   {"settled", static_cast<bool>(m.settled[i])}});
  json events = json::array();
  for (const auto& e : trace.events)
    events.push_back({{"time", num(e.time)}, {"description", e.description}});
  const double bound = std::sqrt(gamma_tilde);
  return {{"dgs", dgs},
          {"band", num(m.band)},
          {"max_deviation", num(m.max_deviation)},
          {"gamma_hat", m.gamma_hat_valid ? num(m.gamma_hat) : json(nullptr)},
          {"gamma_hat_valid", m.gamma_hat_valid},
          {"sqrt_gamma_tilde", num(bound)},
          {"gamma_hat_within_certificate",
           m.gamma_hat_valid ? json(m.gamma_hat <= bound * (1.0 + 1e-2)) : json(nullptr)},
          {"samples", trace.t.size()},
          {"max_substeps", trace.max_substeps},
          {"events", events}};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema:
      return 2;
    case ErrorKind::NonPositiveParameter:
    case ErrorKind::DuplicateLineEndpoints:
    case ErrorKind::InvalidIndex:
    case ErrorKind::DisconnectedGraph:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::DisconnectsGraph:
      return 3;
    case ErrorKind::Infeasible:
    case ErrorKind::AssumptionViolated:
      return 4;
    case ErrorKind::SolverFailure:
    case ErrorKind::NonPositiveGamma:
    case ErrorKind::X22NotNegative:
    case ErrorKind::UnknownEntry:
    case ErrorKind::StructureViolation:
      return 5;
    case ErrorKind::NonFiniteState:
    case ErrorKind::VoltageTooLowForCPL:
    case ErrorKind::ZeroDisturbanceEnergy:
      return 6;
    case ErrorKind::BundleMismatch:
      return 7;
    case ErrorKind::MissingInput:
      return 8;
  }
  return 1;
}

}  // namespace mgc::io
