// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mgc/model.hpp"

namespace mgc::testing {

inline DGUnit make_dg(double R_t, double L_t, double C_t, double Y_L, double V_r = 48.0) {
  DGUnit d;
  d.params = {R_t, L_t, C_t, V_r};
  d.load = {1.0, Y_L, 0.0};
  return d;
}

inline MicrogridSpec two_dg() {
  MicrogridSpec s;
  s.dgs = {make_dg(0.2, 1.8e-3, 2.2e-3, 0.5), make_dg(0.2, 1.8e-3, 2.2e-3, 0.5)};
  s.lines = {{0.05, 1e-4, 0, 1}};
  return s;
}

inline MicrogridSpec four_dg() {
  MicrogridSpec s;
  s.dgs = {make_dg(0.2, 1.8e-3, 2.2e-3, 0.5), make_dg(0.15, 2.0e-3, 1.9e-3, 0.4),
           make_dg(0.25, 2.2e-3, 2.5e-3, 0.6), make_dg(0.18, 1.6e-3, 2.0e-3, 0.45)};
  s.lines = {{0.05, 1e-4, 0, 1}, {0.07, 1.2e-4, 1, 2}, {0.06, 1.1e-4, 2, 3}, {0.08, 0.9e-4, 3, 0}};
  return s;
}

inline MicrogridSpec three_chain() {
  MicrogridSpec s = two_dg();
  s.dgs.push_back(make_dg(0.22, 1.7e-3, 2.3e-3, 0.5));
  s.lines.push_back({0.06, 1.1e-4, 1, 2});
  return s;
}

inline MicrogridSpec single_dg() {
  MicrogridSpec s;
  s.dgs = {make_dg(0.2, 1.8e-3, 2.2e-3, 0.5)};
  return s;
}

}  // namespace mgc::testing
