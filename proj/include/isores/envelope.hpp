#pragma once

// Decay envelopes mu(t), excitation phase S(t) and the resonance data.
//
// Two envelope families are supported:
//   power:      mu(t) = t^-alpha
//   power_log:  mu(t) = t^-alpha * log t
// both with alpha in (0, 1]. The envelope exponent m = floor(1/alpha) and the
// limit chi_m of ell(t)/mu^m(t) (ell = d/dt log mu) are derived per family.

#include <optional>
#include <vector>

namespace isores {

enum class EnvelopeFamily { Power, PowerLog };

struct Envelope {
    EnvelopeFamily family = EnvelopeFamily::Power;
    double alpha = 0.5;
    double t0 = 1.0;

    void validate() const;  // throws std::invalid_argument on bad parameters

    double mu(double t) const;
    double mu_pow(int k, double t) const;
    double ell(double t) const;  // d/dt log mu(t)

    int m() const;
    double chi_m() const;

    // gamma_k(t) = integral of mu^k over [t0, t]. Closed form for the power
    // family; adaptive quadrature (relative error <= 1e-10) for power_log.
    double gamma(int k, double t) const;
    // Same integral over [a, b].
    double gamma_between(int k, double a, double b) const;
    // True iff mu^k is integrable on [t0, infinity).
    bool mu_pow_integrable(int k) const;

    // Natural antiderivative of mu^k with zero integration constant
    // (power family only; used by the closed-form phase).
    double mu_pow_antiderivative(int k, double t) const;
};

struct PhaseLaw {
    std::vector<double> s;  // s[0] = s0, s[1] = s1, ...
    double offset = 0.0;

    double s_coeff(std::size_t k) const { return k < s.size() ? s[k] : 0.0; }
    // S(t): closed form for the power family, quadrature of S' from t0 otherwise.
    double S(double t, const Envelope& env) const;
    double S_prime(double t, const Envelope& env) const;
};

struct Resonance {
    long kappa = 1;
    long varkappa = 1;
    double nu0 = 1.0;
    double s0 = 1.0;

    void validate() const;  // gcd(kappa, varkappa) = 1 and kappa*s0 = varkappa*nu0
    double ratio() const { return static_cast<double>(kappa) / static_cast<double>(varkappa); }
};

struct Horizon {
    bool infinite = false;
    double T = 0.0;  // valid when !infinite; +inf when the root exceeds double range
};

// Stability horizon of the probability bounds: infinite when mu^exponent is
// integrable, otherwise the root T of
//   gamma_exponent(t_s + T) - gamma_exponent(t_s) = eps^(-2(1-l)).
Horizon horizon_T_eps(const Envelope& env, int exponent, double t_s, double eps, double l);

}  // namespace isores
