#include "isores/envelope.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace isores {

namespace {

constexpr double kIntegerSlack = 1e-9;

bool is_integer(double x, double* rounded = nullptr) {
    const double r = std::round(x);
    if (rounded) *rounded = r;
    return std::abs(x - r) <= kIntegerSlack * std::max(1.0, std::abs(x));
}

// Adaptive Simpson quadrature with relative tolerance.
double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol * std::max(1.0, std::abs(left + right)))
        return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

void Envelope::validate() const {
    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw std::invalid_argument("Envelope: alpha must lie in (0, 1]");
    if (!(t0 > 0.0)) throw std::invalid_argument("Envelope: t0 must be positive");
    if (family == EnvelopeFamily::PowerLog && !(std::log(t0) > 1.0 / alpha))
        throw std::invalid_argument(
            "Envelope: power_log requires log(t0) > 1/alpha so mu is positive and "
            "strictly decreasing from t0 on");
}

double Envelope::mu(double t) const {
    if (t < t0) throw std::domain_error("Envelope::mu: t < t0");
    switch (family) {
        case EnvelopeFamily::Power:
            return std::pow(t, -alpha);
        case EnvelopeFamily::PowerLog:
            return std::pow(t, -alpha) * std::log(t);
    }
    return 0.0;
}

double Envelope::mu_pow(int k, double t) const {
    if (k == 0) return 1.0;
    return std::pow(mu(t), k);
}

double Envelope::ell(double t) const {
    if (t < t0) throw std::domain_error("Envelope::ell: t < t0");
    switch (family) {
        case EnvelopeFamily::Power:
            return -alpha / t;
        case EnvelopeFamily::PowerLog:
            return -(alpha - 1.0 / std::log(t)) / t;
    }
    return 0.0;
}

int Envelope::m() const {
    double r = 0.0;
    if (is_integer(1.0 / alpha, &r)) return static_cast<int>(r);
    return static_cast<int>(std::floor(1.0 / alpha));
}

double Envelope::chi_m() const {
    if (family == EnvelopeFamily::PowerLog) return 0.0;
    return is_integer(1.0 / alpha) ? -alpha : 0.0;
}

bool Envelope::mu_pow_integrable(int k) const {
    // For both families mu^k is integrable at infinity iff k*alpha > 1
    // (the log factor does not change the threshold).
    return k * alpha > 1.0 + 1e-12;
}

double Envelope::mu_pow_antiderivative(int k, double t) const {
    if (family != EnvelopeFamily::Power)
        throw std::invalid_argument("mu_pow_antiderivative: power family only");
    const double e = k * alpha;
    if (std::abs(e - 1.0) <= 1e-12) return std::log(t);
    return std::pow(t, 1.0 - e) / (1.0 - e);
}

double Envelope::gamma_between(int k, double a, double b) const {
    if (a < t0 || b < t0) throw std::domain_error("Envelope::gamma: t < t0");
    switch (family) {
        case EnvelopeFamily::Power:
            return mu_pow_antiderivative(k, b) - mu_pow_antiderivative(k, a);
        case EnvelopeFamily::PowerLog:
            return integrate([this, k](double t) { return mu_pow(k, t); }, a, b, 1e-11);
    }
    return 0.0;
}

double Envelope::gamma(int k, double t) const { return gamma_between(k, t0, t); }

double PhaseLaw::S_prime(double t, const Envelope& env) const {
    if (s.empty()) throw std::invalid_argument("PhaseLaw: empty coefficient list");
    double acc = s[0];
    for (std::size_t k = 1; k < s.size(); ++k)
        if (s[k] != 0.0) acc += s[k] * env.mu_pow(static_cast<int>(k), t);
    return acc;
}

double PhaseLaw::S(double t, const Envelope& env) const {
    if (s.empty()) throw std::invalid_argument("PhaseLaw: empty coefficient list");
    double acc = offset + s[0] * t;
    if (env.family == EnvelopeFamily::Power) {
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k] != 0.0)
                acc += s[k] * env.mu_pow_antiderivative(static_cast<int>(k), t);
    } else {
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k] != 0.0) acc += s[k] * env.gamma(static_cast<int>(k), t);
    }
    return acc;
}

void Resonance::validate() const {
    if (kappa < 1 || varkappa < 1)
        throw std::invalid_argument("Resonance: kappa and varkappa must be positive");
    if (std::gcd(kappa, varkappa) != 1)
        throw std::invalid_argument("Resonance: kappa and varkappa must be coprime");
    if (!(nu0 > 0.0) || !(s0 > 0.0))
        throw std::invalid_argument("Resonance: nu0 and s0 must be positive");
    if (std::abs(kappa * s0 - varkappa * nu0) > 1e-12 * std::abs(varkappa * nu0))
        throw std::invalid_argument("Resonance: kappa*s0 = varkappa*nu0 violated");
}

Horizon horizon_T_eps(const Envelope& env, int exponent, double t_s, double eps, double l) {
    if (!(eps > 0.0)) throw std::invalid_argument("horizon_T_eps: eps must be positive");
    if (!(l > 0.0) || !(l < 1.0)) throw std::invalid_argument("horizon_T_eps: l in (0,1)");
    if (t_s < env.t0) throw std::domain_error("horizon_T_eps: t_s < t0");
    if (env.mu_pow_integrable(exponent)) return {true, 0.0};

    const double target = std::pow(eps, -2.0 * (1.0 - l));
    auto residual = [&](double T) { return env.gamma_between(exponent, t_s, t_s + T) - target; };

    double lo = 0.0, hi = std::max(t_s, 1.0);
    while (residual(hi) < 0.0) {
        lo = hi;
        hi *= 4.0;
        if (hi > 1e300) return {false, std::numeric_limits<double>::infinity()};
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = residual(mid);
        if (std::abs(f) <= 1e-12 * std::max(1.0, target)) return {false, mid};
        (f < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
    }
    return {false, 0.5 * (lo + hi)};
}

}  // namespace isores
