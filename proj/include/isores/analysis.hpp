#pragma once

// Regime detection for the averaged system: fixed points of the limiting
// system and their stability (phase locking), asymptotic particular
// solutions, phase-drift radii, Lyapunov-coefficient checks and parameter
// plane partitions.

#include <complex>
#include <functional>
#include <vector>

#include "isores/averaging.hpp"

namespace isores {

enum class Verdict { LockingStable, Unstable, Degenerate };

const char* verdict_name(Verdict v);

struct AnalysisOptions {
    double deg_tol = 1e-8;       // |D| below this -> degenerate
    int seed_grid = 64;          // sign-grid resolution for root seeding
    double root_target = 1e-12;  // Newton convergence target
    double root_accept = 1e-9;   // residual acceptance bound
    double dedup_r = 1e-6;
    double dedup_phi = 1e-6;
};

struct FixedPointReport {
    double rho0 = 0.0;
    double phi0 = 0.0;
    double family_period = 0.0;  // phi0 repeats modulo this
    double residual = 0.0;       // max(|Lambda_n|, |Omega_q|) at the root
    double lambda_n = 0.0, xi_n = 0.0, eta_q = 0.0, omega_q = 0.0;
    double D = 0.0;  // det Y_{n,q}(rho0, phi0, 1)
    std::complex<double> beta1{}, beta2{}, beta2_tilde{};
    double alpha0 = 0.0;  // admissible exponent bound (may be +inf)
    bool q_constraint_ok = false;  // n <= q < (2N + 2 + n)/3
    bool p_constraint_ok = false;  // p > (q - n)/2
    bool gamma_q_infinite = false;
    int n = 0, q = 0, N = 0;
    Verdict verdict = Verdict::Degenerate;
};

// Angular period of the fixed-point families, from the frequency content.
double family_period(const TrigPoly& lambda_n, const TrigPoly& omega_q);

// All roots of (Lambda_n, Omega_q) = 0 in [r_lo, r_hi] x [0, period), found by
// sign-grid seeding plus damped Newton, deduplicated modulo the family period.
std::vector<std::pair<double, double>> find_fixed_points(const TrigPoly& lambda_n,
                                                         const TrigPoly& omega_q,
                                                         double r_lo, double r_hi,
                                                         const AnalysisOptions& opt = {});

FixedPointReport classify_fixed_point(double rho0, double phi0, const AveragedSystem& avg,
                                      const AnalysisOptions& opt = {});

struct ParticularSolution {
    int n = 0, q = 0, N = 0;
    double rho0 = 0.0, phi0 = 0.0;
    std::vector<double> rho_coeffs;  // rho_1 .. rho_{N-q}
    std::vector<double> phi_coeffs;
    double max_linear_residual = 0.0;

    double rho_star(double t, const Envelope& env) const;
    double phi_star(double t, const Envelope& env) const;
    double rho_star_dot(double t, const Envelope& env) const;
    double phi_star_dot(double t, const Envelope& env) const;
};

ParticularSolution particular_solution(const FixedPointReport& fp, const AveragedSystem& avg);

enum class DriftMode { Direct, SecondAveraged };  // Lemma-3 vs Lemma-5 route

struct DriftReport {
    DriftMode mode = DriftMode::SecondAveraged;
    double rho0 = 0.0;
    double xi_stat = 0.0;    // xi_hat (second-averaged) or sup_psi Xi_n (direct)
    double threshold = 0.0;  // delta_{m,n} chi_m / 2
    bool condition_ok = false;
    bool hypotheses_ok = false;
    int q = 0;
    double phi_gamma_coeff = 0.0;  // phi_D(t) ~ phi_gamma_coeff * gamma_q(t)
};

// Phase-drift radii via the roots of F_n (second-averaged amplitude field).
std::vector<DriftReport> classify_drift(const SecondAveraged& second,
                                        const AnalysisOptions& opt = {});
// Phase-drift check on (Lambda_n, Omega_q) directly: Lambda_n(rho0, .) must
// vanish identically in psi while Omega_q(rho0, .) stays bounded away from 0.
std::vector<DriftReport> classify_drift_direct(const AveragedSystem& avg,
                                               const AnalysisOptions& opt = {});

struct LyapunovCheck {
    double alpha = 0.0;
    double B1 = 0.0, B2 = 0.0;
    bool B1_positive = false;
    double max_dVdt = 0.0;  // over the (z, t) grid
};

// Evaluates d/dt of V = B1 z1^2 + z2^2 + mu^{(q-n)/2} B2 z1 z2 along the
// truncated field in the shifted coordinates, over |z| in [z_lo, z_hi].
LyapunovCheck lyapunov_check(const FixedPointReport& fp, const ParticularSolution& sol,
                             const AveragedSystem& avg, double alpha, double z_lo,
                             double z_hi, const std::vector<double>& t_grid);

struct PartitionCell {
    double p1 = 0.0, p2 = 0.0;
    bool has_stable_plus = false;   // a stable root with sin(2 phi0) > 0
    bool has_stable_minus = false;  // a stable root with sin(2 phi0) < 0
    bool has_stable_any = false;
};

struct PartitionGrid {
    double lo1 = 0.0, hi1 = 0.0;
    int n1 = 0;
    double lo2 = 0.0, hi2 = 0.0;
    int n2 = 0;
    double x1(int i) const { return n1 < 2 ? lo1 : lo1 + (hi1 - lo1) * i / (n1 - 1); }
    double x2(int j) const { return n2 < 2 ? lo2 : lo2 + (hi2 - lo2) * j / (n2 - 1); }
};

// Classifies every grid cell with the full pipeline; cells are distributed
// across threads and merged by index.
std::vector<PartitionCell> partition_scan(
    const std::function<SystemSpec(double, double)>& make_spec, const PartitionGrid& grid,
    int N, int threads, const AnalysisOptions& opt = {});

}  // namespace isores
