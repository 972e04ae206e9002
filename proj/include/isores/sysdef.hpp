#pragma once

// System definitions: the perturbed polar system with decaying drift and
// multiplicative noise expansions, and the Cartesian oscillator form it can
// be derived from.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "isores/envelope.hpp"
#include "isores/trigpoly.hpp"

namespace isores {

using NoiseMatrix = std::array<std::array<TrigPoly, 2>, 2>;

// d(rho, phi) = (a0 + sum_k mu^k a_k) dt + eps (sum_k mu^k A_k) dw,
// a0 = (0, nu0). Coefficients are TrigPolys in (r, phi, S) over denominator
// varkappa.
struct SystemSpec {
    Resonance res;
    Envelope env;
    PhaseLaw phase;
    int n = 1;  // leading drift order
    int p = 1;  // leading diffusion order
    std::map<int, std::array<TrigPoly, 2>> drift;  // k -> (a_{1,k}, a_{2,k})
    std::map<int, NoiseMatrix> noise;              // k -> {alpha_{i,j,k}}
    double eps = 0.0;
    double R_max = 4.0;
    double r_min = 0.05;

    void validate() const;

    // Drift/diffusion evaluated at a state (used by the polar simulator).
    // drift1/drift2 exclude the autonomous part a0.
    double drift1(double rho, double phi, double S, double t) const;
    double drift2(double rho, double phi, double S, double t) const;
    std::array<std::array<double, 2>, 2> noise_at(double rho, double phi, double S,
                                                  double t) const;
};

// Planar oscillator
//   dx1 = x2 dt,
//   dx2 = (-x1 + mu^n(t) f(x1, x2, S)) dt + eps mu^p(t) g(x1, S) dw1
// with f, g polynomial in x with trig-poly-in-S coefficients.
struct XYMonomial {
    int dx1 = 0;
    int dx2 = 0;
    TrigPoly coeff;  // in S only
};

struct CartesianSpec {
    Resonance res;  // nu0 must be 1 for this form
    Envelope env;
    PhaseLaw phase;
    int n = 2;
    int p = 1;
    std::vector<XYMonomial> f;
    std::vector<XYMonomial> g;  // independent of x2
    double eps = 0.0;
    double R_max = 4.0;
    double r_min = 0.05;

    void validate() const;
    double eval_f(double x1, double x2, double S) const;
    double eval_g(double x1, double S) const;
};

// Polar form of the Cartesian system including the Ito drift corrections of
// order 2p: a_{1,n} = -f sin(phi), a_{2,n} = -f cos(phi)/r,
// a^eps_{1,2p} = eps^2 g^2 cos^2(phi)/(2r), a^eps_{2,2p} = -eps^2 g^2 sin(2phi)/(2r^2),
// alpha_{1,1,p} = -g sin(phi), alpha_{2,1,p} = -g cos(phi)/r.
SystemSpec cartesian_to_polar(const CartesianSpec& cs);

// JSON spec document: {resonance, envelope, phase, n, p, eps, R_max,
// drift: {"k": [expr, expr]}, noise: {"k": [[expr,...],...]}} with expressions
// in the parse_expr grammar over the lab angle phi.
SystemSpec load_system_spec(const std::string& json_text);
SystemSpec load_system_spec_file(const std::string& path);
std::string system_spec_to_json(const SystemSpec& spec);

}  // namespace isores
