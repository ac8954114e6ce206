// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mgc/model.hpp"
#include "mgc/synthesis.hpp"

namespace mgc {

enum class DisturbanceKind { LoadStep, ConductanceStep, ReferenceStep, CplStep };
const char* to_string(DisturbanceKind k);

struct Disturbance {
  double time = 0.0;
  DisturbanceKind kind = DisturbanceKind::LoadStep;
  int target = 0;  // DG index at the time of the event
  double value = 0.0;
};

// New DG with one line to an existing DG.
struct AddDG {
  DGUnit dg;
  int attach_to = 0;
  double R = 0.0;
  double L = 0.0;
};

struct RemoveDG {
  int index = 0;
};

using PnpAction = std::variant<AddDG, RemoveDG>;

struct PnpEvent {
  double time = 0.0;
  PnpAction action;
};

struct Scenario {
  double t_end = 0.5;
  double dt = 1e-5;
  std::optional<Eigen::VectorXd> initial;  // nullopt starts at the equilibrium
  std::vector<Disturbance> disturbances;
  std::vector<PnpEvent> pnp;
  bool enable_cpl = false;
  // Splits each step so that the fastest closed-loop mode stays inside the RK4 stability region.
  bool stability_substeps = true;
};

// Throws Schema on dt <= 0, events outside [0, t_end], or unsorted events.
void validate_scenario(const Scenario& s);

struct EventRecord {
  double time = 0.0;
  std::string description;
};

struct SimTrace {
  std::vector<double> t;
  std::vector<std::string> columns;         // column names after the time column
  std::vector<std::vector<double>> rows;    // may be shorter than columns; missing means absent
  std::vector<EventRecord> events;
  int max_substeps = 1;
  // Scaled-channel energies accumulated along the run, for the empirical gain.
  double z_energy = 0.0;
  double w_energy = 0.0;
  bool gain_valid = false;
  bool disturbed = false;  // at least one disturbance was applied
  std::vector<std::string> final_dgs;  // stable DG names present at the end
  std::vector<double> final_V_ref;

  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> series(const std::string& name) const;  // NaN where the unit is absent
};

// Physical state ordering: per DG (V, I_t, v), then per line I_l.
Eigen::VectorXd derivative(const ValidatedModel& model, const ControllerSet& c,
                           const Eigen::VectorXd& x, bool enable_cpl);

// Solves f(x) = 0; Newton when constant-power loads are active.
Eigen::VectorXd equilibrium(const ValidatedModel& model, const ControllerSet& c, bool enable_cpl);

struct PnpPlan {
  std::vector<std::string> reused;
  std::vector<std::string> recomputed;
};

struct PnpOutcome {
  ValidatedModel model;
  ControllerSet controllers;
  PnpPlan plan;
  std::vector<int> dg_origin;    // old index of each new DG, -1 for a new one
  std::vector<int> line_origin;  // old index of each new line, -1 for a new one
};

PnpOutcome apply_pnp(const ValidatedModel& model, const ControllerSet& c, const PnpAction& action,
                     const SynthesisConfig& config,
                     const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

SimTrace simulate(const ValidatedModel& model, const ControllerSet& c, const Scenario& s,
                  const SynthesisConfig& config = {},
                  const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

struct Metrics {
  std::vector<std::string> dgs;        // stable DG names present at the end
  std::vector<double> final_error;     // |V - V_r| at the final sample
  std::vector<double> settling_time;   // after the last event; 0 when never outside the band
  std::vector<double> overshoot;       // peak |V - V_r| / V_r after the last event
  std::vector<bool> settled;           // inside the band at the final sample
  double max_deviation = 0.0;          // max |V - V_r| over all DGs and samples
  double band = 0.02;
  double gamma_hat = 0.0;              // sqrt(z energy / w energy) in scaled channels
  bool gamma_hat_valid = false;
};

// sqrt(z energy / w energy); throws ZeroDisturbanceEnergy when no disturbance entered and
// AssumptionViolated when the run crossed a PnP event or had constant-power loads.
double empirical_gain(const SimTrace& trace);

Metrics metrics(const SimTrace& trace, double band = 0.02);

// Columns: t, then dg<k>.{V,It,v,u,e,z} and line<k>.{I,u}; empty cells mark absent units.
void write_csv(const SimTrace& trace, std::ostream& os);
// Reads a trace written by write_csv; events and energies are not stored in the file.
SimTrace read_csv(std::istream& is);

}  // namespace mgc
