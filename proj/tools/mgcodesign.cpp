// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "mgc/io.hpp"

namespace {

using namespace mgc;

std::string basename(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

int fail(const Error& e) {
  std::cerr << "error";
  if (!e.stage().empty()) std::cerr << " [stage " << e.stage() << "]";
  std::cerr << ": " << to_string(e.kind()) << ": " << e.what() << "\n";
  return io::exit_code(e.kind());
}

int cmd_check(const std::string& path) {
  const io::Config cfg = io::load_config(path);
  const auto violations = find_violations(cfg.microgrid);
  if (!violations.empty()) {
    for (const auto& v : violations)
      std::cout << v.kind << " microgrid." << v.field << ": " << v.message << "\n";
    return 3;
  }
  std::cout << "OK " << cfg.microgrid.dgs.size() << " DGs, " << cfg.microgrid.lines.size()
            << " lines, config hash " << cfg.hash << "\n";
  return 0;
}

void print_summary(const ValidatedModel& model, const ControllerSet& c, double gamma_bar) {
  std::printf("gamma_tilde %.6g (gamma_bar %.6g), global residual %.3e, attempts %d\n",
              c.gamma_tilde, gamma_bar, c.global_residual, c.attempts);
  std::printf("%-6s %12s %12s %12s %12s %14s\n", "dg", "nu", "rho", "gamma_i", "cert_res",
              "K_io");
  for (std::size_t i = 0; i < c.dgs.size(); ++i) {
    const auto& r = c.dgs[i];
    std::printf("dg%-4zu %12.5g %12.5g %12.5g %12.3e   [%.4g %.4g %.4g]\n", i, r.indices.nu,
                r.indices.rho, r.indices.gamma_i, r.certificate_residual, r.K_io(0), r.K_io(1),
                r.K_io(2));
  }
  std::printf("%-6s %12s %12s %12s %12s\n", "line", "nu_bar", "rho_bar", "K_lo", "cert_res");
  for (std::size_t l = 0; l < c.lines.size(); ++l) {
    const auto& r = c.lines[l];
    std::printf("line%-2zu %12.5g %12.5g %12.5g %12.3e\n", l, r.indices.nu, r.indices.rho, r.K_lo,
                r.certificate_residual);
  }
  std::printf("topology: %zu edges\n", c.topology.size());
  for (const auto& e : c.topology) {
    const Eigen::RowVector3d k = c.k(e.to, e.from, model);
    std::printf("  dg%d <- dg%d  weight %.4g  k = [%.4g %.4g %.4g]\n", e.to, e.from, e.weight,
                k(0), k(1), k(2));
  }
}

int cmd_synthesize(const std::string& cfg_path, const std::string& out,
                   std::optional<double> c_offdiag, std::optional<double> gamma_bar,
                   std::optional<std::string> mode) {
  io::Config cfg = io::load_config(cfg_path);
  const ValidatedModel model = validate(cfg.microgrid);
  if (c_offdiag) cfg.synthesis.c_offdiag = *c_offdiag;
  if (gamma_bar) cfg.synthesis.gamma_bar = *gamma_bar;
  if (mode) cfg.synthesis.mode = *mode == "literal" ? ConditionMode::Literal : ConditionMode::Rederived;
  const ControllerSet c = co_design(model, cfg.synthesis);
  io::write_file(out, io::dump(io::bundle_to_json(model, c, cfg.synthesis, cfg.hash,
                                                  basename(cfg_path))));
  print_summary(model, c, cfg.synthesis.gamma_bar);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_simulate(const std::string& cfg_path, const std::string& bundle_path,
                 const std::string& prefix) {
  const io::Config cfg = io::load_config(cfg_path);
  const ValidatedModel model = validate(cfg.microgrid);
  const io::Bundle b = io::load_bundle(bundle_path);
  if (b.config_hash != cfg.hash || b.num_dgs != model.num_dgs() ||
      b.num_lines != model.num_lines())
    throw Error(ErrorKind::BundleMismatch,
                "bundle was synthesized for a different microgrid (hash " + b.config_hash +
                    ", config " + cfg.hash + ")");
  const SimTrace trace = simulate(model, b.controllers, cfg.scenario, cfg.synthesis);
  const Metrics m = metrics(trace);
  std::ostringstream csv;
  write_csv(trace, csv);
  const std::string trace_path = prefix + ".trace.csv";
  const std::string metrics_path = prefix + ".metrics.json";
  io::write_file(trace_path, csv.str());
  io::json mj = io::metrics_to_json(m, trace, b.controllers.gamma_tilde);
  mj["manifest"] = {{"config", basename(cfg_path)},
                    {"bundle", basename(bundle_path)},
                    {"config_hash", cfg.hash},
                    {"trace", basename(trace_path)}};
  io::write_file(metrics_path, io::dump(mj));
  for (const auto& e : trace.events) std::printf("t=%.6g  %s\n", e.time, e.description.c_str());
  for (std::size_t i = 0; i < m.dgs.size(); ++i)
    std::printf("%-6s final error %.3e  settling %.4g s  %s\n", m.dgs[i].c_str(),
                m.final_error[i], m.settling_time[i], m.settled[i] ? "settled" : "NOT settled");
  if (m.gamma_hat_valid)
    std::printf("gamma_hat %.6g, sqrt(gamma_tilde) %.6g\n", m.gamma_hat,
                std::sqrt(b.controllers.gamma_tilde));
  std::cout << "wrote " << trace_path << " and " << metrics_path << "\n";
  return 0;
}

int cmd_report(const std::string& bundle_path, const std::string& trace_path,
               const std::string& csv_prefix) {
  const io::Bundle b = io::load_bundle(bundle_path);
  std::ifstream in(trace_path);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot read " + trace_path);
  const SimTrace trace = read_csv(in);
  const Metrics m = metrics(trace);
  const ControllerSet& c = b.controllers;

  std::printf("gamma_tilde %.6g, global residual %.3e\n", c.gamma_tilde, c.global_residual);
  std::printf("%-8s %14s %14s %14s %8s\n", "dg", "final_error", "settled_by_s", "overshoot",
              "settled");
  for (std::size_t i = 0; i < m.dgs.size(); ++i)
    std::printf("%-8s %14.4e %14.6g %14.4e %8s\n", m.dgs[i].c_str(), m.final_error[i],
                m.settling_time[i], m.overshoot[i], m.settled[i] ? "yes" : "no");
  std::printf("topology (%zu edges)\n", c.topology.size());
  for (const auto& e : c.topology)
    std::printf("  dg%d <- dg%d  %.17g\n", e.to, e.from, e.weight);

  if (!csv_prefix.empty()) {
    std::ostringstream s;
    s << "dg,final_error,settling_time,overshoot,settled\n" << std::setprecision(17);
    for (std::size_t i = 0; i < m.dgs.size(); ++i)
      s << m.dgs[i] << ',' << m.final_error[i] << ',' << m.settling_time[i] << ','
        << m.overshoot[i] << ',' << (m.settled[i] ? 1 : 0) << '\n';
    io::write_file(csv_prefix + ".settling.csv", s.str());
    std::ostringstream t;
    t << "to,from,weight\n" << std::setprecision(17);
    for (const auto& e : c.topology) t << e.to << ',' << e.from << ',' << e.weight << '\n';
    io::write_file(csv_prefix + ".topology.csv", t.str());
    std::cout << "wrote " << csv_prefix << ".settling.csv and " << csv_prefix
              << ".topology.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dissipativity-based co-design of distributed controllers and topology for DC "
               "microgrids"};
  app.require_subcommand(1);

  std::string cfg, bundle, out, trace, csv_prefix;
  std::optional<double> c_offdiag, gamma_bar;
  std::optional<std::string> mode;

  auto* check = app.add_subcommand("check", "Validate a configuration file");
  check->add_option("config", cfg, "Configuration JSON")->required();

  auto* synth = app.add_subcommand("synthesize", "Run the co-design and write a result bundle");
  synth->add_option("config", cfg, "Configuration JSON")->required();
  synth->add_option("-o,--output", out, "Bundle JSON to write")->required();
  synth->add_option("--c-offdiag", c_offdiag, "Override the off-diagonal gain penalty");
  synth->add_option("--gamma-bar", gamma_bar, "Override the gain bound");
  synth->add_option("--mode", mode, "Condition mode")
      ->check(CLI::IsMember({"rederived", "literal"}));

  auto* sim = app.add_subcommand("simulate", "Simulate the configured scenario");
  sim->add_option("config", cfg, "Configuration JSON")->required();
  sim->add_option("-c,--controllers", bundle, "Bundle JSON")->required();
  sim->add_option("-o,--output", out, "Output prefix")->required();

  auto* report = app.add_subcommand("report", "Summarize a bundle and a trace");
  report->add_option("-c,--controllers", bundle, "Bundle JSON")->required();
  report->add_option("-t,--trace", trace, "Trace CSV")->required();
  report->add_option("--csv", csv_prefix, "Prefix for plot-ready CSV summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check(cfg);
    if (*synth) return cmd_synthesize(cfg, out, c_offdiag, gamma_bar, mode);
    if (*sim) return cmd_simulate(cfg, bundle, out);
    if (*report) return cmd_report(bundle, trace, csv_prefix);
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
