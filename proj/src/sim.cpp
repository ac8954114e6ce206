// SPDX-License-Identifier: Apache-2.0
#include "mgc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mgc/errors.hpp"

namespace mgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::LoadStep: return "load_step";
    case DisturbanceKind::ConductanceStep: return "conductance_step";
    case DisturbanceKind::ReferenceStep: return "reference_step";
    case DisturbanceKind::CplStep: return "cpl_step";
  }
  return "unknown";
}

void validate_scenario(const Scenario& s) {
  if (!(s.dt > 0.0) || !std::isfinite(s.dt))
    throw Error(ErrorKind::Schema, "scenario.dt must be positive");
  if (!(s.t_end > 0.0) || !std::isfinite(s.t_end))
    throw Error(ErrorKind::Schema, "scenario.t_end must be positive");
  double last = 0.0;
  for (const auto& d : s.disturbances) {
    if (d.time < 0.0 || d.time > s.t_end)
      throw Error(ErrorKind::Schema, "disturbance time outside [0, t_end]");
    if (d.time < last) throw Error(ErrorKind::Schema, "disturbances must be sorted by time");
    last = d.time;
  }
  last = 0.0;
  for (const auto& e : s.pnp) {
    if (e.time < 0.0 || e.time > s.t_end)
      throw Error(ErrorKind::Schema, "pnp event time outside [0, t_end]");
    if (e.time < last) throw Error(ErrorKind::Schema, "pnp events must be sorted by time");
    last = e.time;
  }
}

int SimTrace::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> SimTrace::series(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out(rows.size(), std::numeric_limits<double>::quiet_NaN());
  if (c < 0) return out;
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (c < static_cast<int>(rows[k].size())) out[k] = rows[k][c];
  return out;
}

namespace {

double load_current(const ZipLoad& load, double V, const DGParams& p, bool cpl) {
  if (!cpl) return load.I_const + load.Y_L * V;
  return zip_current(load, V, cpl_voltage_floor(p));
}

// Input voltage of DG i.
double dg_input(const ValidatedModel& model, const ControllerSet& c, const VectorXd& x, int i) {
  const int N = model.num_dgs();
  double u = c.dgs[i].K_io.dot(x.segment<3>(3 * i));
  if (c.K.size() > 0)
    u += model.spec.dgs[i].params.L_t * c.K.row(3 * i + 1).dot(x.head(3 * N));
  return u;
}

}  // namespace

VectorXd derivative(const ValidatedModel& model, const ControllerSet& c, const VectorXd& x,
                    bool enable_cpl) {
  const int N = model.num_dgs();
  const int L = model.num_lines();
  if (x.size() != 3 * N + L) throw Error(ErrorKind::DimensionMismatch, "state size mismatch");
  VectorXd f(3 * N + L);
  for (int i = 0; i < N; ++i) {
    const DGParams& p = model.spec.dgs[i].params;
    const double V = x(3 * i), It = x(3 * i + 1);
    double inj = 0.0;
    for (int l = 0; l < L; ++l) inj += model.B(i, l) * x(3 * N + l);
    f(3 * i) = (It - load_current(model.spec.dgs[i].load, V, p, enable_cpl) - inj) / p.C_t;
    f(3 * i + 1) = (-V - p.R_t * It + dg_input(model, c, x, i)) / p.L_t;
    f(3 * i + 2) = p.V_r - V;
  }
  for (int l = 0; l < L; ++l) {
    const LineParams& ln = model.spec.lines[l];
    double drive = 0.0;
    for (int i = 0; i < N; ++i) drive += model.B(i, l) * x(3 * i);
    const double I = x(3 * N + l);
    f(3 * N + l) = (-ln.R * I + c.lines[l].K_lo * I + drive) / ln.L;
  }
  return f;
}

VectorXd equilibrium(const ValidatedModel& model, const ControllerSet& c, bool enable_cpl) {
  const MatrixXd A = closed_loop_matrix(model, c);
  const int n = static_cast<int>(A.rows());
  VectorXd d = VectorXd::Zero(n);
  for (int i = 0; i < model.num_dgs(); ++i) {
    const auto& dg = model.spec.dgs[i];
    d(3 * i) = -dg.load.I_const / dg.params.C_t;
    d(3 * i + 2) = dg.params.V_r;
  }
  const Eigen::PartialPivLU<MatrixXd> lu(A);
  VectorXd x = lu.solve(-d);
  bool has_cpl = false;
  for (const auto& dg : model.spec.dgs) has_cpl |= enable_cpl && dg.load.P_star > 0.0;
  if (!has_cpl) {
    if (!x.allFinite()) throw Error(ErrorKind::SolverFailure, "closed loop has no equilibrium");
    return x;
  }
  for (int it = 0; it < 50; ++it) {
    const VectorXd f = derivative(model, c, x, true);
    if (f.cwiseAbs().maxCoeff() < 1e-9 * (1.0 + d.cwiseAbs().maxCoeff())) return x;
    MatrixXd J = A;
    for (int i = 0; i < model.num_dgs(); ++i) {
      const auto& dg = model.spec.dgs[i];
      const double V = x(3 * i);
      J(3 * i, 3 * i) += dg.load.P_star / (V * V * dg.params.C_t);
    }
    x -= J.partialPivLu().solve(f);
  }
  throw Error(ErrorKind::SolverFailure, "equilibrium Newton iteration did not converge");
}

PnpOutcome apply_pnp(const ValidatedModel& model, const ControllerSet& c, const PnpAction& action,
                     const SynthesisConfig& config, const lmi::SolverOptions& options) {
  const int N = model.num_dgs();
  const int L = model.num_lines();
  PnpOutcome out;
  MicrogridSpec spec = model.spec;
  LocalReuse reuse;
  if (const auto* add = std::get_if<AddDG>(&action)) {
    if (add->attach_to < 0 || add->attach_to >= N)
      throw Error(ErrorKind::InvalidIndex, "AddDG attaches to a missing DG");
    spec.dgs.push_back(add->dg);
    spec.lines.push_back({add->R, add->L, N, add->attach_to});
    for (int i = 0; i < N; ++i) {
      reuse.dgs.push_back(c.dgs[i]);
      out.dg_origin.push_back(i);
      out.plan.reused.push_back("dg " + std::to_string(i));
    }
    reuse.dgs.push_back(std::nullopt);
    out.dg_origin.push_back(-1);
    out.plan.recomputed.push_back("dg " + std::to_string(N));
    for (int l = 0; l < L; ++l) {
      reuse.lines.push_back(c.lines[l]);
      out.line_origin.push_back(l);
      out.plan.reused.push_back("line " + std::to_string(l));
    }
    reuse.lines.push_back(std::nullopt);
    out.line_origin.push_back(-1);
    out.plan.recomputed.push_back("line " + std::to_string(L));
  } else {
    const int r = std::get<RemoveDG>(action).index;
    if (r < 0 || r >= N) throw Error(ErrorKind::InvalidIndex, "RemoveDG index out of range");
    if (N == 1) throw Error(ErrorKind::DisconnectsGraph, "cannot remove the only DG");
    spec.dgs.clear();
    spec.lines.clear();
    std::vector<int> remap(N, -1);
    for (int i = 0; i < N; ++i) {
      if (i == r) continue;
      remap[i] = static_cast<int>(spec.dgs.size());
      spec.dgs.push_back(model.spec.dgs[i]);
      reuse.dgs.push_back(c.dgs[i]);
      out.dg_origin.push_back(i);
      out.plan.reused.push_back("dg " + std::to_string(i));
    }
    for (int l = 0; l < L; ++l) {
      LineParams ln = model.spec.lines[l];
      if (ln.from_dg == r || ln.to_dg == r) continue;
      ln.from_dg = remap[ln.from_dg];
      ln.to_dg = remap[ln.to_dg];
      spec.lines.push_back(ln);
      reuse.lines.push_back(c.lines[l]);
      out.line_origin.push_back(l);
      out.plan.reused.push_back("line " + std::to_string(l));
    }
    if (!is_connected(N - 1, spec.lines))
      throw Error(ErrorKind::DisconnectsGraph,
                  "removing DG " + std::to_string(r) + " disconnects the network");
  }
  out.plan.recomputed.push_back("global");
  out.model = validate(spec);
  out.controllers = co_design(out.model, config, reuse, options);
  return out;
}

namespace {

struct Plant {
  ValidatedModel model;
  ControllerSet ctrl;
  std::vector<std::string> dg_names;
  std::vector<std::string> line_names;
  int substeps = 1;
};

int stable_substeps(const Plant& p, double h, bool enabled) {
  if (!enabled) return 1;
  const Eigen::VectorXcd ev = closed_loop_matrix(p.model, p.ctrl).eigenvalues();
  double radius = 0.0;
  for (int k = 0; k < ev.size(); ++k) radius = std::max(radius, std::abs(ev(k)));
  // RK4 is stable on the negative real axis up to about 2.78.
  return std::max(1, static_cast<int>(std::ceil(h * radius / 2.5)));
}

VectorXd rk4(const Plant& p, const VectorXd& x, double h, bool cpl) {
  const VectorXd k1 = derivative(p.model, p.ctrl, x, cpl);
  const VectorXd k2 = derivative(p.model, p.ctrl, x + 0.5 * h * k1, cpl);
  const VectorXd k3 = derivative(p.model, p.ctrl, x + 0.5 * h * k2, cpl);
  const VectorXd k4 = derivative(p.model, p.ctrl, x + h * k3, cpl);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Nominal linear closed loop at t = 0 and the channel scalings of the gain certificate.
struct GainChannels {
  MatrixXd A0;
  VectorXd x0;
  VectorXd f0;  // equilibrium residual, removed from w
  std::vector<Eigen::Matrix3d> Tinv;

  double z2(const VectorXd& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < Tinv.size(); ++i) {
      const double z = Tinv[i](2, 2) * (x(3 * i + 2) - x0(3 * i + 2));
      s += z * z;
    }
    return s;
  }
  double w2(const VectorXd& f, const VectorXd& x) const {
    const VectorXd w = f - f0 - A0 * (x - x0);
    double s = 0.0;
    for (std::size_t i = 0; i < Tinv.size(); ++i)
      s += (Tinv[i] * w.segment<3>(3 * i)).squaredNorm();
    return s;
  }
};

struct Recorder {
  SimTrace& trace;
  std::map<std::string, int> index;

  int col(const std::string& name) {
    const auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int c = static_cast<int>(trace.columns.size());
    trace.columns.push_back(name);
    index.emplace(name, c);
    return c;
  }

  void record(double t, const Plant& p, const VectorXd& x) {
    const int N = p.model.num_dgs();
    std::vector<std::pair<int, double>> vals;
    for (int i = 0; i < N; ++i) {
      const std::string& n = p.dg_names[i];
      const double V = x(3 * i);
      const double Vr = p.model.spec.dgs[i].params.V_r;
      vals.emplace_back(col(n + ".V"), V);
      vals.emplace_back(col(n + ".It"), x(3 * i + 1));
      vals.emplace_back(col(n + ".v"), x(3 * i + 2));
      vals.emplace_back(col(n + ".u"), dg_input(p.model, p.ctrl, x, i));
      vals.emplace_back(col(n + ".e"), Vr - V);
      vals.emplace_back(col(n + ".z"), x(3 * i + 2));
    }
    for (int l = 0; l < p.model.num_lines(); ++l) {
      const double I = x(3 * N + l);
      vals.emplace_back(col(p.line_names[l] + ".I"), I);
      vals.emplace_back(col(p.line_names[l] + ".u"), p.ctrl.lines[l].K_lo * I);
    }
    std::vector<double> row(trace.columns.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [c, v] : vals) row[c] = v;
    trace.t.push_back(t);
    trace.rows.push_back(std::move(row));
  }
};

void apply_disturbance(Plant& p, const Disturbance& d) {
  if (d.target < 0 || d.target >= p.model.num_dgs())
    throw Error(ErrorKind::InvalidIndex, "disturbance targets a missing DG");
  DGUnit& u = p.model.spec.dgs[d.target];
  switch (d.kind) {
    case DisturbanceKind::LoadStep: u.load.I_const += d.value; break;
    case DisturbanceKind::ConductanceStep: u.load.Y_L += d.value; break;
    case DisturbanceKind::ReferenceStep: u.params.V_r += d.value; break;
    case DisturbanceKind::CplStep: u.load.P_star += d.value; break;
  }
}

}  // namespace

SimTrace simulate(const ValidatedModel& model, const ControllerSet& c, const Scenario& s,
                  const SynthesisConfig& config, const lmi::SolverOptions& options) {
  validate_scenario(s);
  Plant p{model, c, {}, {}, 1};
  for (int i = 0; i < model.num_dgs(); ++i) p.dg_names.push_back("dg" + std::to_string(i));
  for (int l = 0; l < model.num_lines(); ++l) p.line_names.push_back("line" + std::to_string(l));
  int next_dg = model.num_dgs();
  int next_line = model.num_lines();

  VectorXd x;
  if (s.initial) {
    if (s.initial->size() != 3 * model.num_dgs() + model.num_lines())
      throw Error(ErrorKind::DimensionMismatch, "initial state size mismatch");
    x = *s.initial;
  } else {
    x = equilibrium(model, c, s.enable_cpl);
  }

  SimTrace trace;
  bool initial_cpl = false;
  for (const auto& dg : model.spec.dgs) initial_cpl |= s.enable_cpl && dg.load.P_star > 0.0;
  trace.gain_valid = !s.initial && s.pnp.empty() && !initial_cpl;
  GainChannels gc;
  if (trace.gain_valid) {
    gc.A0 = closed_loop_matrix(model, c);
    gc.x0 = x;
    gc.f0 = derivative(model, c, x, s.enable_cpl);
    for (const auto& T : c.scaling.T) gc.Tinv.push_back(T.inverse());
  }

  // Events in time order; disturbances precede PnP events at equal times.
  struct Ev {
    double time;
    int kind;  // 0 disturbance, 1 pnp
    std::size_t idx;
  };
  std::vector<Ev> events;
  for (std::size_t k = 0; k < s.disturbances.size(); ++k)
    events.push_back({s.disturbances[k].time, 0, k});
  for (std::size_t k = 0; k < s.pnp.size(); ++k) events.push_back({s.pnp[k].time, 1, k});
  std::stable_sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
    return a.time < b.time || (a.time == b.time && a.kind < b.kind);
  });

  Recorder rec{trace, {}};
  double t = 0.0;
  rec.record(t, p, x);
  std::size_t next = 0;
  auto check_finite = [&](const VectorXd& v, double at) {
    if (!v.allFinite())
      throw Error(ErrorKind::NonFiniteState, "state is not finite at t=" + std::to_string(at));
  };

  while (true) {
    while (next < events.size() && events[next].time <= t) {
      const Ev& e = events[next++];
      if (e.kind == 0) {
        const Disturbance& d = s.disturbances[e.idx];
        apply_disturbance(p, d);
        trace.disturbed = true;
        std::ostringstream os;
        os << to_string(d.kind) << " on " << p.dg_names[d.target] << " by " << d.value;
        trace.events.push_back({t, os.str()});
      } else {
        const PnpAction& a = s.pnp[e.idx].action;
        PnpOutcome o = apply_pnp(p.model, p.ctrl, a, config, options);
        const int N0 = p.model.num_dgs();
        const int N1 = o.model.num_dgs();
        const int L1 = o.model.num_lines();
        VectorXd y = VectorXd::Zero(3 * N1 + L1);
        std::vector<std::string> dn, ln;
        for (int i = 0; i < N1; ++i) {
          const int from = o.dg_origin[i];
          if (from >= 0) {
            y.segment<3>(3 * i) = x.segment<3>(3 * from);
            dn.push_back(p.dg_names[from]);
          } else {
            y(3 * i) = o.model.spec.dgs[i].params.V_r;
            dn.push_back("dg" + std::to_string(next_dg++));
          }
        }
        for (int l = 0; l < L1; ++l) {
          const int from = o.line_origin[l];
          if (from >= 0) {
            y(3 * N1 + l) = x(3 * N0 + from);
            ln.push_back(p.line_names[from]);
          } else {
            ln.push_back("line" + std::to_string(next_line++));
          }
        }
        std::string what;
        if (const auto* add = std::get_if<AddDG>(&a))
          what = "add " + dn.back() + " at " + p.dg_names[add->attach_to];
        else
          what = "remove " + p.dg_names[std::get<RemoveDG>(a).index];
        p.model = std::move(o.model);
        p.ctrl = std::move(o.controllers);
        p.dg_names = std::move(dn);
        p.line_names = std::move(ln);
        x = std::move(y);
        trace.events.push_back({t, what});
      }
    }
    if (t >= s.t_end) break;
    const double te = next < events.size() ? std::min(events[next].time, s.t_end) : s.t_end;
    const double span = te - t;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(span / s.dt - 1e-9)));
    const double h = span / nsteps;
    const int k = stable_substeps(p, h, s.stability_substeps);
    trace.max_substeps = std::max(trace.max_substeps, k);
    const double hh = h / k;
    double zp = 0.0, wp = 0.0;
    if (trace.gain_valid) {
      zp = gc.z2(x);
      wp = gc.w2(derivative(p.model, p.ctrl, x, s.enable_cpl), x);
    }
    for (int step = 1; step <= nsteps; ++step) {
      for (int sub = 0; sub < k; ++sub) {
        x = rk4(p, x, hh, s.enable_cpl);
        if (trace.gain_valid) {
          const double zn = gc.z2(x);
          const double wn = gc.w2(derivative(p.model, p.ctrl, x, s.enable_cpl), x);
          trace.z_energy += 0.5 * hh * (zp + zn);
          trace.w_energy += 0.5 * hh * (wp + wn);
          zp = zn;
          wp = wn;
        }
      }
      const double ts = step == nsteps ? te : t + step * h;
      check_finite(x, ts);
      rec.record(ts, p, x);
    }
    t = te;
  }
  for (int i = 0; i < p.model.num_dgs(); ++i) {
    trace.final_dgs.push_back(p.dg_names[i]);
    trace.final_V_ref.push_back(p.model.spec.dgs[i].params.V_r);
  }
  return trace;
}

double empirical_gain(const SimTrace& trace) {
  if (!trace.gain_valid)
    throw Error(ErrorKind::AssumptionViolated,
                "empirical gain needs an equilibrium start without PnP events or constant-power loads");
  if (!trace.disturbed || !(trace.w_energy > 0.0))
    throw Error(ErrorKind::ZeroDisturbanceEnergy, "disturbance energy is zero");
  return std::sqrt(trace.z_energy / trace.w_energy);
}

Metrics metrics(const SimTrace& trace, double band) {
  Metrics m;
  m.band = band;
  double last_event = 0.0;
  for (const auto& e : trace.events) last_event = std::max(last_event, e.time);
  for (const std::string& n : trace.final_dgs) {
    const std::vector<double> V = trace.series(n + ".V");
    const std::vector<double> E = trace.series(n + ".e");
    m.dgs.push_back(n);
    double settle = 0.0, peak = 0.0, final_err = std::numeric_limits<double>::quiet_NaN();
    bool inside = false;
    for (std::size_t k = 0; k < V.size(); ++k) {
      if (std::isnan(V[k]) || std::isnan(E[k])) continue;
      const double Vr = V[k] + E[k];
      const double dev = std::abs(E[k]);
      m.max_deviation = std::max(m.max_deviation, dev);
      final_err = dev;
      inside = dev <= band * std::abs(Vr);
      if (trace.t[k] < last_event) continue;
      peak = std::max(peak, dev / std::abs(Vr));
      if (!inside) settle = trace.t[k] - last_event;
    }
    m.final_error.push_back(final_err);
    m.settling_time.push_back(settle);
    m.overshoot.push_back(peak);
    m.settled.push_back(inside);
  }
  if (trace.gain_valid && trace.disturbed && trace.w_energy > 0.0) {
    m.gamma_hat = empirical_gain(trace);
    m.gamma_hat_valid = true;
  }
  return m;
}

void write_csv(const SimTrace& trace, std::ostream& os) {
  os << "t";
  for (const auto& c : trace.columns) os << ',' << c;
  os << '\n';
  os << std::setprecision(10);
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    os << trace.t[k];
    for (std::size_t c = 0; c < trace.columns.size(); ++c) {
      os << ',';
      if (c < trace.rows[k].size() && !std::isnan(trace.rows[k][c])) os << trace.rows[k][c];
    }
    os << '\n';
  }
}

SimTrace read_csv(std::istream& is) {
  SimTrace trace;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t", 0) != 0)
    throw Error(ErrorKind::Schema, "trace CSV lacks a header starting with t");
  std::stringstream hs(line);
  std::string cell;
  std::getline(hs, cell, ',');
  while (std::getline(hs, cell, ',')) {
    trace.columns.push_back(cell);
    const auto dot = cell.find('.');
    if (cell.rfind("dg", 0) == 0 && dot != std::string::npos && cell.substr(dot) == ".V")
      trace.final_dgs.push_back(cell.substr(0, dot));
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream rs(line);
    std::getline(rs, cell, ',');
    try {
      trace.t.push_back(std::stod(cell));
      std::vector<double> row;
      while (std::getline(rs, cell, ','))
        row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
      trace.rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Schema, "non-numeric trace cell: " + cell);
    }
  }
  return trace;
}

}  // namespace mgc
