#include "isores/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace isores {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_to(double x, double period) {
    double y = std::fmod(x, period);
    if (y < 0) y += period;
    return y;
}

double circ_dist(double a, double b, double period) {
    double d = std::abs(wrap_to(a - b, period));
    return std::min(d, period - d);
}

struct Field2 {
    const TrigPoly& L;
    const TrigPoly& O;
    TrigPoly Lr, Lp, Or, Op;

    Field2(const TrigPoly& l, const TrigPoly& o)
        : L(l),
          O(o),
          Lr(l.diff(TrigPoly::Var::r)),
          Lp(l.diff(TrigPoly::Var::psi)),
          Or(o.diff(TrigPoly::Var::r)),
          Op(o.diff(TrigPoly::Var::psi)) {}

    std::pair<double, double> value(double r, double p) const {
        return {L.eval(r, p, 0.0), O.eval(r, p, 0.0)};
    }
    double res_norm(double r, double p) const {
        auto [a, b] = value(r, p);
        return std::max(std::abs(a), std::abs(b));
    }
};

// Damped Newton iteration for (Lambda, Omega) = 0; returns true on
// convergence to the target residual.
bool newton_2d(const Field2& f, double& r, double& p, double r_lo, double r_hi,
               const AnalysisOptions& opt) {
    double res = f.res_norm(r, p);
    for (int it = 0; it < 80; ++it) {
        if (res <= opt.root_target) return true;
        const double a = f.Lr.eval(r, p, 0.0), b = f.Lp.eval(r, p, 0.0);
        const double c = f.Or.eval(r, p, 0.0), d = f.Op.eval(r, p, 0.0);
        const double det = a * d - b * c;
        if (std::abs(det) < 1e-300) return false;
        auto [fr, fp] = f.value(r, p);
        const double dr = (d * fr - b * fp) / det;
        const double dp = (-c * fr + a * fp) / det;
        double step = 1.0;
        bool improved = false;
        for (int h = 0; h < 10; ++h) {
            const double rn = r - step * dr, pn = p - step * dp;
            if (rn >= r_lo * 0.5 && rn <= r_hi * 2.0) {
                const double rnorm = f.res_norm(rn, pn);
                if (rnorm < res) {
                    r = rn;
                    p = pn;
                    res = rnorm;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!improved) return res <= opt.root_accept;
    }
    return res <= opt.root_target;
}

int angular_gcd(const TrigPoly& p, int g) {
    for (const auto& t : p.terms())
        if (t.jpsi != 0) g = static_cast<int>(std::gcd(static_cast<long>(g),
                                                       static_cast<long>(std::abs(t.jpsi))));
    return g;
}

// Scalar mu-power series helpers for the particular solution.
double series_pow_coeff(const std::vector<double>& P, const std::vector<double>& Q, int a,
                        int b, int order) {
    // coefficient of mu^order in P^a Q^b; P, Q are indexed from order 1
    std::vector<double> acc(static_cast<std::size_t>(order) + 1, 0.0);
    acc[0] = 1.0;
    auto mul_in = [&](const std::vector<double>& X) {
        std::vector<double> next(acc.size(), 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            if (acc[i] == 0.0) continue;
            for (std::size_t j = 1; j < X.size() && i + j < next.size(); ++j)
                next[i + j] += acc[i] * X[j];
        }
        acc = std::move(next);
    };
    for (int i = 0; i < a; ++i) mul_in(P);
    for (int i = 0; i < b; ++i) mul_in(Q);
    return acc[static_cast<std::size_t>(order)];
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Roots of a function of r on [lo, hi]: dense sampling + bisection + Newton.
std::vector<double> roots_1d(const std::function<double(double)>& f,
                             const std::function<double(double)>& fprime, double lo,
                             double hi, double accept) {
    std::vector<double> roots;
    const int ns = 1024;
    double prev = f(lo);
    for (int i = 1; i <= ns; ++i) {
        const double x = lo + (hi - lo) * i / ns;
        const double cur = f(x);
        if (prev == 0.0 || prev * cur < 0.0) {
            double a = lo + (hi - lo) * (i - 1) / ns, b = x;
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fm == 0.0) {
                    a = b = m;
                    break;
                }
                if (f(a) * fm < 0.0)
                    b = m;
                else
                    a = m;
            }
            double r = 0.5 * (a + b);
            for (int it = 0; it < 30; ++it) {
                const double d = fprime(r);
                if (std::abs(d) < 1e-300) break;
                const double step = f(r) / d;
                r -= step;
                if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
            }
            if (r >= lo && r <= hi && std::abs(f(r)) <= accept) {
                bool dup = false;
                for (double e : roots)
                    if (std::abs(e - r) < 1e-8) dup = true;
                if (!dup) roots.push_back(r);
            }
        }
        prev = cur;
    }
    return roots;
}

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::LockingStable: return "locking_stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Degenerate: return "degenerate";
    }
    return "?";
}

double family_period(const TrigPoly& lambda_n, const TrigPoly& omega_q) {
    int g = angular_gcd(lambda_n, 0);
    g = angular_gcd(omega_q, g);
    if (g == 0) return kTwoPi;
    return kTwoPi / g;
}

std::vector<std::pair<double, double>> find_fixed_points(const TrigPoly& lambda_n,
                                                         const TrigPoly& omega_q,
                                                         double r_lo, double r_hi,
                                                         const AnalysisOptions& opt) {
    const Field2 f(lambda_n, omega_q);
    const int G = opt.seed_grid;
    std::vector<double> lv(static_cast<std::size_t>((G + 1) * (G + 1)));
    std::vector<double> ov(lv.size());
    for (int i = 0; i <= G; ++i) {
        const double r = r_lo + (r_hi - r_lo) * i / G;
        for (int j = 0; j <= G; ++j) {
            const double p = kTwoPi * j / G;
            lv[static_cast<std::size_t>(i * (G + 1) + j)] = lambda_n.eval(r, p, 0.0);
            ov[static_cast<std::size_t>(i * (G + 1) + j)] = omega_q.eval(r, p, 0.0);
        }
    }
    auto sign_change = [&](const std::vector<double>& vals, int i, int j) {
        const double v00 = vals[static_cast<std::size_t>(i * (G + 1) + j)];
        const double v01 = vals[static_cast<std::size_t>(i * (G + 1) + j + 1)];
        const double v10 = vals[static_cast<std::size_t>((i + 1) * (G + 1) + j)];
        const double v11 = vals[static_cast<std::size_t>((i + 1) * (G + 1) + j + 1)];
        const double mn = std::min(std::min(v00, v01), std::min(v10, v11));
        const double mx = std::max(std::max(v00, v01), std::max(v10, v11));
        return mn <= 0.0 && mx >= 0.0;
    };
    std::vector<std::pair<double, double>> roots;
    for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
            if (!sign_change(lv, i, j) || !sign_change(ov, i, j)) continue;
            double r = r_lo + (r_hi - r_lo) * (i + 0.5) / G;
            double p = kTwoPi * (j + 0.5) / G;
            if (!newton_2d(f, r, p, r_lo, r_hi, opt)) continue;
            if (f.res_norm(r, p) > opt.root_accept) continue;
            if (r < r_lo - 1e-9 || r > r_hi + 1e-9) continue;
            p = wrap_to(p, kTwoPi);
            bool dup = false;
            for (const auto& [er, ep] : roots)
                if (std::abs(er - r) < opt.dedup_r && circ_dist(ep, p, kTwoPi) < opt.dedup_phi)
                    dup = true;
            if (!dup) roots.emplace_back(r, p);
        }
    }
    // collapse to one representative per family
    const double period = family_period(lambda_n, omega_q);
    std::vector<std::pair<double, double>> reps;
    for (auto [r, p] : roots) {
        const double rep = wrap_to(p, period);
        bool dup = false;
        for (const auto& [er, ep] : reps)
            if (std::abs(er - r) < opt.dedup_r && circ_dist(ep, rep, period) < opt.dedup_phi)
                dup = true;
        if (!dup) reps.emplace_back(r, rep);
    }
    std::sort(reps.begin(), reps.end());
    return reps;
}

FixedPointReport classify_fixed_point(double rho0, double phi0, const AveragedSystem& avg,
                                      const AnalysisOptions& opt) {
    if (!avg.q) throw std::invalid_argument("classify_fixed_point: system has no q");
    const int q = *avg.q;
    const int n = avg.n;
    if (q < n)
        throw std::invalid_argument(
            "classify_fixed_point: fixed points require q >= n (Omega_q is a nonzero "
            "constant for q < n)");
    const TrigPoly& L = avg.lambda_at(n);
    const TrigPoly& O = avg.omega_at(q);

    FixedPointReport rep;
    rep.rho0 = rho0;
    rep.phi0 = phi0;
    rep.n = n;
    rep.q = q;
    rep.N = avg.N;
    rep.family_period = family_period(L, O);
    rep.residual = std::max(std::abs(L.eval(rho0, phi0, 0.0)), std::abs(O.eval(rho0, phi0, 0.0)));
    rep.lambda_n = L.diff(TrigPoly::Var::r).eval(rho0, phi0, 0.0);
    rep.xi_n = L.diff(TrigPoly::Var::psi).eval(rho0, phi0, 0.0);
    rep.eta_q = O.diff(TrigPoly::Var::r).eval(rho0, phi0, 0.0);
    rep.omega_q = O.diff(TrigPoly::Var::psi).eval(rho0, phi0, 0.0);
    rep.D = rep.lambda_n * rep.omega_q - rep.xi_n * rep.eta_q;
    rep.q_constraint_ok = (n <= q) && (3 * q < 2 * avg.N + 2 + n);
    rep.p_constraint_ok = 2 * avg.p > q - n;
    rep.gamma_q_infinite = !avg.env.mu_pow_integrable(q);

    if (std::abs(rep.D) <= opt.deg_tol) {
        rep.verdict = Verdict::Degenerate;
        return rep;
    }

    const double chi = avg.env.chi_m();
    const int m = avg.env.m();
    if (q == n) {
        const std::complex<double> disc(
            (rep.lambda_n + rep.omega_q) * (rep.lambda_n + rep.omega_q) - 4.0 * rep.D, 0.0);
        const std::complex<double> root = std::sqrt(disc);
        rep.beta1 = 0.5 * ((rep.lambda_n + rep.omega_q) + root);
        rep.beta2 = 0.5 * ((rep.lambda_n + rep.omega_q) - root);
        rep.beta2_tilde = rep.beta2;  // (q - n) = 0
    } else {
        rep.beta1 = rep.lambda_n;
        rep.beta2 = rep.D / rep.lambda_n;
        rep.beta2_tilde = rep.beta2 - (m == q ? 1.0 : 0.0) * (q - n) * chi / 2.0;
    }

    const double inf = std::numeric_limits<double>::infinity();
    const double bound1 = chi < 0.0 ? 2.0 * rep.beta1.real() / chi : inf;
    const double bound2 = chi < 0.0 ? 2.0 * rep.beta2_tilde.real() / chi : inf;
    const double bound3 = 2.0 * avg.N + 2 + n - 3 * q;
    rep.alpha0 = 0.5 * std::min(std::min(bound1, bound2), bound3);

    const double re1 = rep.beta1.real(), re2 = rep.beta2_tilde.real();
    if (re1 < 0.0 && re2 < 0.0 && rep.q_constraint_ok)
        rep.verdict = Verdict::LockingStable;
    else if (q == n && (re1 > 0.0 || rep.beta2.real() > 0.0))
        rep.verdict = Verdict::Unstable;
    else if (q > n && re1 > 0.0 && re2 > 0.0)
        rep.verdict = Verdict::Unstable;
    else
        rep.verdict = Verdict::Degenerate;
    return rep;
}

double ParticularSolution::rho_star(double t, const Envelope& env) const {
    double acc = rho0;
    for (std::size_t k = 0; k < rho_coeffs.size(); ++k)
        acc += rho_coeffs[k] * env.mu_pow(static_cast<int>(k) + 1, t);
    return acc;
}

double ParticularSolution::phi_star(double t, const Envelope& env) const {
    double acc = phi0;
    for (std::size_t k = 0; k < phi_coeffs.size(); ++k)
        acc += phi_coeffs[k] * env.mu_pow(static_cast<int>(k) + 1, t);
    return acc;
}

double ParticularSolution::rho_star_dot(double t, const Envelope& env) const {
    double acc = 0.0;
    const double l = env.ell(t);
    for (std::size_t k = 0; k < rho_coeffs.size(); ++k)
        acc += rho_coeffs[k] * (static_cast<int>(k) + 1) * env.mu_pow(static_cast<int>(k) + 1, t) * l;
    return acc;
}

double ParticularSolution::phi_star_dot(double t, const Envelope& env) const {
    double acc = 0.0;
    const double l = env.ell(t);
    for (std::size_t k = 0; k < phi_coeffs.size(); ++k)
        acc += phi_coeffs[k] * (static_cast<int>(k) + 1) * env.mu_pow(static_cast<int>(k) + 1, t) * l;
    return acc;
}

ParticularSolution particular_solution(const FixedPointReport& fp, const AveragedSystem& avg) {
    if (fp.verdict != Verdict::LockingStable)
        throw std::invalid_argument("particular_solution: requires a locking_stable report");
    const int q = fp.q, n = fp.n, N = fp.N;
    const int K = N - q;
    ParticularSolution sol;
    sol.n = n;
    sol.q = q;
    sol.N = N;
    sol.rho0 = fp.rho0;
    sol.phi0 = fp.phi0;
    if (K <= 0) return sol;

    // derivative values of Lambda_{n+j} and Omega_{q+j} at the fixed point
    auto deriv_table = [&](const TrigPoly& poly, int max_ord) {
        std::vector<std::vector<double>> d(static_cast<std::size_t>(max_ord) + 1);
        TrigPoly da = poly;
        for (int a = 0; a <= max_ord; ++a) {
            TrigPoly dab = da;
            for (int b = 0; a + b <= max_ord; ++b) {
                d[static_cast<std::size_t>(a)].push_back(dab.eval(fp.rho0, fp.phi0, 0.0));
                dab = dab.diff(TrigPoly::Var::psi);
            }
            da = da.diff(TrigPoly::Var::r);
        }
        return d;
    };
    std::vector<std::vector<std::vector<double>>> dL, dO;
    for (int j = 0; j <= K; ++j) {
        dL.push_back(deriv_table(avg.lambda_at(n + j), K));
        dO.push_back(deriv_table(avg.omega_at(q + j), K));
    }

    std::vector<double> P(1, 0.0), Q(1, 0.0);  // indexed from order 1 below
    P.resize(static_cast<std::size_t>(K) + 1, 0.0);
    Q.resize(static_cast<std::size_t>(K) + 1, 0.0);

    const double la = fp.lambda_n, xi = fp.xi_n, eta = fp.eta_q, om = fp.omega_q;
    for (int k = 1; k <= K; ++k) {
        auto rest = [&](const std::vector<std::vector<std::vector<double>>>& d) {
            double acc = 0.0;
            for (int j = 0; j <= std::min(k, K); ++j) {
                for (int a = 0; a + j <= k; ++a) {
                    for (int b = 0; a + b + j <= k; ++b) {
                        if (j == 0 && a + b <= 1) continue;  // root value and unknowns
                        const double c = d[static_cast<std::size_t>(j)]
                                          [static_cast<std::size_t>(a)]
                                          [static_cast<std::size_t>(b)];
                        if (c == 0.0) continue;
                        const double w = series_pow_coeff(P, Q, a, b, k - j);
                        if (w != 0.0) acc += c * w / (factorial(a) * factorial(b));
                    }
                }
            }
            return acc;
        };
        const double Fk = -rest(dL);
        const double Gk = -rest(dO);
        const double det = fp.D;
        const double rk = (om * Fk - xi * Gk) / det;
        const double pk = (-eta * Fk + la * Gk) / det;
        P[static_cast<std::size_t>(k)] = rk;
        Q[static_cast<std::size_t>(k)] = pk;
        sol.rho_coeffs.push_back(rk);
        sol.phi_coeffs.push_back(pk);
        sol.max_linear_residual =
            std::max({sol.max_linear_residual, std::abs(la * rk + xi * pk - Fk),
                      std::abs(eta * rk + om * pk - Gk)});
    }
    return sol;
}

std::vector<DriftReport> classify_drift(const SecondAveraged& second,
                                        const AnalysisOptions& opt) {
    const TrigPoly& Fn = second.f_at(second.n);
    std::vector<DriftReport> out;
    if (Fn.empty()) return out;
    auto f = [&](double r) { return Fn.eval(r, 0.0, 0.0); };
    const TrigPoly Fd = Fn.diff(TrigPoly::Var::r);
    auto fd = [&](double r) { return Fd.eval(r, 0.0, 0.0); };
    const double chi = second.env.chi_m();
    const int m = second.env.m();
    const double threshold = (m == second.n ? 1.0 : 0.0) * chi / 2.0;
    for (double r0 : roots_1d(f, fd, second.r_min, second.R_max, opt.root_accept)) {
        DriftReport rep;
        rep.mode = DriftMode::SecondAveraged;
        rep.rho0 = r0;
        rep.q = second.q;
        rep.xi_stat = fd(r0);
        rep.threshold = threshold;
        rep.hypotheses_ok =
            second.n > second.q && 2 * second.p > second.q && second.s_q != 0.0;
        rep.condition_ok = rep.hypotheses_ok && std::abs(rep.xi_stat) > 0.0 &&
                           rep.xi_stat < threshold - 1e-10;
        rep.phi_gamma_coeff = -second.res.ratio() * second.s_q;
        out.push_back(rep);
    }
    return out;
}

std::vector<DriftReport> classify_drift_direct(const AveragedSystem& avg,
                                               const AnalysisOptions& opt) {
    std::vector<DriftReport> out;
    if (!avg.q) return out;
    const int q = *avg.q;
    const TrigPoly& Ln = avg.lambda_at(avg.n);
    const TrigPoly& Oq = avg.omega_at(q);
    if (Ln.empty()) return out;

    // Group Lambda_n by harmonic; each group is a polynomial in r whose
    // common positive roots are the drift radii candidates.
    struct RPoly {
        std::map<int, double> c;
        double eval(double r) const {
            double acc = 0.0;
            for (auto [d, v] : c) acc += v * std::pow(r, d);
            return acc;
        }
        double deriv(double r) const {
            double acc = 0.0;
            for (auto [d, v] : c)
                if (d != 0) acc += v * d * std::pow(r, d - 1);
            return acc;
        }
        double max_abs() const {
            double m = 0.0;
            for (auto [d, v] : c) m = std::max(m, std::abs(v));
            return m;
        }
    };
    std::map<std::tuple<int, int, int>, RPoly> groups;
    for (const auto& t : Ln.terms())
        groups[{static_cast<int>(t.kind), t.jpsi, t.lnum}].c[t.rpow] += t.coeff;
    const RPoly* lead = nullptr;
    for (const auto& [key, g] : groups)
        if (!lead || g.max_abs() > lead->max_abs()) lead = &g;
    if (!lead) return out;

    auto f = [&](double r) { return lead->eval(r); };
    auto fd = [&](double r) { return lead->deriv(r); };
    const TrigPoly Xi = Ln.diff(TrigPoly::Var::r);
    const double chi = avg.env.chi_m();
    const int m = avg.env.m();
    const double threshold = (m == avg.n ? 1.0 : 0.0) * chi / 2.0;
    const double s_q = avg.s_coeff(q);

    for (double r0 : roots_1d(f, fd, avg.r_min, avg.R_max, opt.root_accept)) {
        bool all_vanish = true;
        for (const auto& [key, g] : groups)
            if (std::abs(g.eval(r0)) > opt.root_accept) all_vanish = false;
        if (!all_vanish) continue;
        // Omega_q(rho0, psi) must stay away from zero
        bool omega_ok = true;
        double sup_xi = -std::numeric_limits<double>::infinity();
        const int grid = 4096;
        for (int i = 0; i < grid; ++i) {
            const double psi = kTwoPi * i / grid;
            if (std::abs(Oq.eval(r0, psi, 0.0)) < 1e-12) omega_ok = false;
            sup_xi = std::max(sup_xi, Xi.eval(r0, psi, 0.0));
        }
        // local refinement of the supremum around the best grid node
        {
            double best_psi = 0.0, best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < grid; ++i) {
                const double psi = kTwoPi * i / grid;
                const double v = Xi.eval(r0, psi, 0.0);
                if (v > best) {
                    best = v;
                    best_psi = psi;
                }
            }
            double a = best_psi - kTwoPi / grid, b = best_psi + kTwoPi / grid;
            for (int it = 0; it < 60; ++it) {
                const double x1 = a + (b - a) * 0.381966, x2 = b - (b - a) * 0.381966;
                if (Xi.eval(r0, x1, 0.0) < Xi.eval(r0, x2, 0.0))
                    a = x1;
                else
                    b = x2;
            }
            sup_xi = std::max(sup_xi, Xi.eval(r0, 0.5 * (a + b), 0.0));
        }
        DriftReport rep;
        rep.mode = DriftMode::Direct;
        rep.rho0 = r0;
        rep.q = q;
        rep.xi_stat = sup_xi;
        rep.threshold = threshold;
        rep.hypotheses_ok = omega_ok && !Xi.empty();
        rep.condition_ok = rep.hypotheses_ok && sup_xi < threshold - 1e-10;
        rep.phi_gamma_coeff = -avg.res.ratio() * s_q;
        out.push_back(rep);
    }
    return out;
}

LyapunovCheck lyapunov_check(const FixedPointReport& fp, const ParticularSolution& sol,
                             const AveragedSystem& avg, double alpha, double z_lo,
                             double z_hi, const std::vector<double>& t_grid) {
    if (fp.verdict != Verdict::LockingStable)
        throw std::invalid_argument("lyapunov_check: requires a locking_stable report");
    if (fp.lambda_n == 0.0)
        throw std::invalid_argument("lyapunov_check: lambda_n = 0");
    const double chi = avg.env.chi_m();
    const int m = avg.env.m();
    const int q = fp.q, n = fp.n;
    const double dqm = (m == q) ? 1.0 : 0.0;

    const double omega_tilde_alpha = fp.omega_q - dqm * chi * (alpha + 0.5 * (q - n));
    const double beta2_tilde_alpha = fp.beta2_tilde.real() - dqm * chi * alpha;
    const double xi_scale = std::max({std::abs(fp.lambda_n), std::abs(fp.omega_q), 1.0});
    const bool xi_zero = std::abs(fp.xi_n) <= 1e-9 * xi_scale;

    LyapunovCheck out;
    out.alpha = alpha;
    out.B1 = xi_zero ? fp.lambda_n * omega_tilde_alpha
                     : fp.lambda_n * beta2_tilde_alpha / (2.0 * fp.xi_n * fp.xi_n);
    out.B2 = -(2.0 * out.B1 * fp.xi_n + 2.0 * fp.eta_q) / fp.lambda_n;
    out.B1_positive = out.B1 > 0.0;

    const double half_shift = 0.5 * (q - n);
    double maxd = -std::numeric_limits<double>::infinity();
    const int n_rad = 8, n_ang = 32;
    for (double t : t_grid) {
        const double mu_half = std::pow(avg.env.mu(t), half_shift);
        const double ell = avg.env.ell(t);
        const double rs = sol.rho_star(t, avg.env);
        const double ps = sol.phi_star(t, avg.env);
        const double rs_dot = sol.rho_star_dot(t, avg.env);
        const double ps_dot = sol.phi_star_dot(t, avg.env);
        for (int ir = 0; ir < n_rad; ++ir) {
            const double zr = z_lo + (z_hi - z_lo) * ir / (n_rad - 1);
            for (int ia = 0; ia < n_ang; ++ia) {
                const double th = kTwoPi * ia / n_ang;
                const double z1 = zr * std::cos(th), z2 = zr * std::sin(th);
                const double rho = rs + z1;
                const double phi = ps + mu_half * z2;
                const double z1dot = avg.lambda_hat(rho, phi, t) - rs_dot;
                const double z2dot =
                    (avg.omega_hat(rho, phi, t) - ps_dot) / mu_half - half_shift * ell * z2;
                // dV/dt = dV/dt|_explicit + grad V . zdot; the explicit part by
                // central finite difference of the mu^{(q-n)/2} B2 weight
                const double h = 1e-4 * t;
                const double wp = std::pow(avg.env.mu(t + h), half_shift);
                const double wm = std::pow(avg.env.mu(t - h), half_shift);
                const double dVdt_explicit = (wp - wm) / (2.0 * h) * out.B2 * z1 * z2;
                const double dV =
                    dVdt_explicit + (2.0 * out.B1 * z1 + mu_half * out.B2 * z2) * z1dot +
                    (2.0 * z2 + mu_half * out.B2 * z1) * z2dot;
                maxd = std::max(maxd, dV);
            }
        }
    }
    out.max_dVdt = maxd;
    return out;
}

std::vector<PartitionCell> partition_scan(
    const std::function<SystemSpec(double, double)>& make_spec, const PartitionGrid& grid,
    int N, int threads, const AnalysisOptions& opt) {
    const int total = grid.n1 * grid.n2;
    std::vector<PartitionCell> cells(static_cast<std::size_t>(total));
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int idx = next.fetch_add(1);
            if (idx >= total) break;
            const int i = idx / grid.n2, j = idx % grid.n2;
            PartitionCell cell;
            cell.p1 = grid.x1(i);
            cell.p2 = grid.x2(j);
            try {
                const SystemSpec spec = make_spec(cell.p1, cell.p2);
                const AveragedSystem avg = average_first(spec, N);
                if (avg.q && *avg.q >= avg.n) {
                    const auto roots = find_fixed_points(avg.lambda_at(avg.n),
                                                         avg.omega_at(*avg.q), spec.r_min,
                                                         spec.R_max, opt);
                    const double period =
                        family_period(avg.lambda_at(avg.n), avg.omega_at(*avg.q));
                    for (const auto& [r0, p0] : roots) {
                        const auto rep = classify_fixed_point(r0, p0, avg, opt);
                        if (rep.verdict != Verdict::LockingStable) continue;
                        cell.has_stable_any = true;
                        // sweep every representative of the family over a full turn
                        for (double phi = p0; phi < kTwoPi; phi += period) {
                            const double s2 = std::sin(2.0 * phi);
                            if (s2 > 0.5) cell.has_stable_plus = true;
                            if (s2 < -0.5) cell.has_stable_minus = true;
                        }
                    }
                }
            } catch (const std::exception&) {
                // an unclassifiable cell stays unlabeled
            }
            cells[static_cast<std::size_t>(idx)] = cell;
        }
    };
    const int nw = std::max(1, threads);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return cells;
}

}  // namespace isores
