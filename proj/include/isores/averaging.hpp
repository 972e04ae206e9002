#pragma once

// Resonance averaging.
//
// First averaging: the order-by-order construction of the transformed drift
//   dr   = sum_k mu^k Lambda_k(r, psi) dt + ...,
//   dpsi = sum_k mu^k Omega_k(r, psi) dt + ...
// together with the zero-S-mean generators (u_k, v_k) of the near-identity
// change of variables. Second averaging (phase-drift regime, q < n): the
// additional psi-average producing F_k(z) and the generators e_k.

#include <array>
#include <map>
#include <optional>

#include "isores/sysdef.hpp"

namespace isores {

struct AveragedSystem {
    int N = 0;
    int n = 1;
    int p = 1;
    Resonance res;
    Envelope env;
    PhaseLaw phase;
    double eps = 0.0;
    double R_max = 4.0;
    double r_min = 0.05;

    std::map<int, TrigPoly> Lambda;  // S-free, orders 1..N (entries may be zero)
    std::map<int, TrigPoly> Omega;   // S-free
    std::map<int, TrigPoly> u;       // zero S-mean generators
    std::map<int, TrigPoly> v;
    std::map<int, std::array<TrigPoly, 2>> b;  // slow-frame drift coefficients
    std::map<int, NoiseMatrix> B;              // slow-frame diffusion coefficients

    std::optional<int> q;   // smallest order with Omega_k not identically zero
    bool omega_q_constant = false;

    double s_coeff(int k) const { return phase.s_coeff(static_cast<std::size_t>(k)); }
    const TrigPoly& lambda_at(int k) const;
    const TrigPoly& omega_at(int k) const;

    // sum_{k<=N} mu^k(t) Lambda_k / Omega_k at a state.
    double lambda_hat(double r, double psi, double t) const;
    double omega_hat(double r, double psi, double t) const;
};

// Slow-frame coefficients: b_{1,k} = a_{1,k} at phi = (kappa/varkappa) S + Psi,
// b_{2,k} = same for a_{2,k} minus kappa s_k / varkappa; B_k entrywise.
std::map<int, std::array<TrigPoly, 2>> slow_frame_drift(const SystemSpec& spec, int N);
std::map<int, NoiseMatrix> slow_frame_noise(const SystemSpec& spec, int N);

// Theorem-hypothesis bounds: n <= N <= m (m from the envelope).
AveragedSystem average_first(const SystemSpec& spec, int N);

struct QInfo {
    std::optional<int> q;
    bool constant = false;  // Omega_q is a constant (the q < n structure)
};
QInfo find_q(const AveragedSystem& avg);

struct SecondAveraged {
    int N = 0;
    int n = 1;
    int p = 1;
    int q = 1;
    double s_q = 0.0;
    Resonance res;
    Envelope env;
    PhaseLaw phase;
    double eps = 0.0;
    double R_max = 4.0;
    double r_min = 0.05;

    std::map<int, TrigPoly> F;  // orders n..N, functions of r only
    std::map<int, TrigPoly> e;  // orders n-q..N-q, zero psi-mean, S-free
    std::map<int, NoiseMatrix> C;  // composed diffusion coefficients (r, psi, S)

    const TrigPoly& f_at(int k) const;
    double f_hat(double z, double t) const;  // sum mu^k F_k(z)
    // Leading phase velocity of the drift regime: -kappa s_q mu^q / varkappa.
    double g_leading(double t) const;
};

// Requires q < n, 2p > q and s_q != 0 (the second-averaging hypotheses).
SecondAveraged average_second(const AveragedSystem& avg);

}  // namespace isores
