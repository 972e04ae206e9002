#pragma once

// Built-in example systems and figure presets.
//
// ex0: dx1 = x2 dt, dx2 = (-x1 + t^{-n/4} f) dt + eps t^{-p/4} g dw1 with
//      f = A1 x1 cos S + (B0 + B1 sin S) x2 + C0 x2^3, g = x1 sin S,
//      S(t) = s0 t + (4 s1 / 3) t^{3/4}, s0 = 2, kappa/varkappa = 1/2.
// ex2: dx2 = (-x1 + t^{-n/2} f) dt + eps t^{-p/2} g dw1 with
//      f = A1 x1 sin S + (B0 + B1 sin 2S + C0 x1^2) x2, g = x1 sin S,
//      S(t) = t + 2 s1 sqrt(t), s0 = 1, kappa = varkappa = 1.
//
// Overridable parameters: A1, B0, B1, C0, eps, s1, n, p, t0, R_max, r_min.

#include <map>
#include <string>
#include <vector>

#include "isores/sde.hpp"
#include "isores/sysdef.hpp"

namespace isores {

using Overrides = std::map<std::string, double>;

CartesianSpec make_ex0(const Overrides& ov = {});
CartesianSpec make_ex2(const Overrides& ov = {});

// Named presets: ex0, ex2 and the figure parameter sets fig-ex0a, fig-ex0b,
// fig-ex0c, fig-ex1, fig-ex11, fig-ex2, fig-ex20, fig-ex22. Explicit overrides
// are applied on top of the preset's own parameters.
CartesianSpec make_preset(const std::string& name, const Overrides& ov = {});
bool is_preset_name(const std::string& name);
std::vector<std::string> preset_names();
// The preset's parameter values after overrides (for provenance output).
Overrides preset_parameters(const std::string& name, const Overrides& ov = {});

// Deterministic initial-condition lattice used by the multi-path figures:
// radii 0.3, 0.6, ..., 2.1 crossed with psi0 in {0, pi/2, pi, 3pi/2}.
std::vector<PolarIC> ic_lattice();

}  // namespace isores
