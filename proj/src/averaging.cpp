#include "isores/averaging.hpp"

#include <cmath>
#include <stdexcept>

namespace isores {

namespace {

using Series = std::map<int, TrigPoly>;

const TrigPoly& zero_poly(int den) {
    // per-thread cache: averaging runs concurrently across partition cells
    thread_local std::map<int, TrigPoly> cache;
    auto it = cache.find(den);
    if (it == cache.end()) it = cache.emplace(den, TrigPoly(den)).first;
    return it->second;
}

const TrigPoly& series_at(const Series& s, int k, int den) {
    auto it = s.find(k);
    return it == s.end() ? zero_poly(den) : it->second;
}

// Truncated product of sparse mu-power series.
Series series_mul(const Series& A, const Series& B, int maxN, int den) {
    Series out;
    for (const auto& [i, a] : A) {
        if (a.empty()) continue;
        for (const auto& [j, b] : B) {
            if (i + j > maxN || b.empty()) continue;
            auto it = out.find(i + j);
            if (it == out.end())
                out.emplace(i + j, a * b);
            else
                it->second += a * b;
        }
    }
    (void)den;
    return out;
}

// U^a * V^b truncated at maxN. U, V carry orders >= 1, so the result carries
// orders >= a + b.
Series shift_power(const Series& U, int a, const Series& V, int b, int maxN, int den) {
    Series acc;
    acc.emplace(0, TrigPoly::constant(1.0, den));
    for (int i = 0; i < a; ++i) acc = series_mul(acc, U, maxN, den);
    for (int i = 0; i < b; ++i) acc = series_mul(acc, V, maxN, den);
    return acc;
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Order-k Taylor terms of sum_j mu^j M_j(r + U, psi + V) beyond M_k itself:
//   sum_{j<k} sum_{a+b>=1} d_r^a d_psi^b M_j / (a! b!) * [U^a V^b]_{k-j}.
TrigPoly composition_terms(const Series& M, const Series& U, const Series& V, int k,
                           int den) {
    TrigPoly out(den);
    for (const auto& [j, Mj] : M) {
        if (j >= k || Mj.empty()) continue;
        const int budget = k - j;
        for (int a = 0; a <= budget; ++a) {
            TrigPoly da = Mj;
            for (int i = 0; i < a; ++i) da = da.diff(TrigPoly::Var::r);
            if (a > 0 && da.empty()) break;
            for (int b = (a == 0 ? 1 : 0); a + b <= budget; ++b) {
                TrigPoly dab = da;
                for (int i = 0; i < b; ++i) dab = dab.diff(TrigPoly::Var::psi);
                if (dab.empty()) break;
                const Series P = shift_power(U, a, V, b, k, den);
                auto it = P.find(k - j);
                if (it == P.end() || it->second.empty()) continue;
                out += (dab * it->second).scaled(1.0 / (factorial(a) * factorial(b)));
            }
        }
    }
    return out;
}

std::array<TrigPoly, 3> hessian(const TrigPoly& w) {
    const TrigPoly wr = w.diff(TrigPoly::Var::r);
    return {wr.diff(TrigPoly::Var::r), wr.diff(TrigPoly::Var::psi),
            w.diff(TrigPoly::Var::psi).diff(TrigPoly::Var::psi)};
}

// tr(Bi^T H(w) Bj) with H the (r, psi) Hessian.
TrigPoly hessian_trace(const NoiseMatrix& Bi, const TrigPoly& w, const NoiseMatrix& Bj,
                       int den) {
    const auto H = hessian(w);
    TrigPoly out(den);
    for (int c = 0; c < 2; ++c) {
        out += Bi[0][c] * H[0] * Bj[0][c];
        out += Bi[0][c] * H[1] * Bj[1][c];
        out += Bi[1][c] * H[1] * Bj[0][c];
        out += Bi[1][c] * H[2] * Bj[1][c];
    }
    return out;
}

}  // namespace

const TrigPoly& AveragedSystem::lambda_at(int k) const {
    return series_at(Lambda, k, static_cast<int>(res.varkappa));
}

const TrigPoly& AveragedSystem::omega_at(int k) const {
    return series_at(Omega, k, static_cast<int>(res.varkappa));
}

double AveragedSystem::lambda_hat(double r, double psi, double t) const {
    double acc = 0.0;
    for (const auto& [k, L] : Lambda)
        if (!L.empty()) acc += env.mu_pow(k, t) * L.eval(r, psi, 0.0);
    return acc;
}

double AveragedSystem::omega_hat(double r, double psi, double t) const {
    double acc = 0.0;
    for (const auto& [k, O] : Omega)
        if (!O.empty()) acc += env.mu_pow(k, t) * O.eval(r, psi, 0.0);
    return acc;
}

std::map<int, std::array<TrigPoly, 2>> slow_frame_drift(const SystemSpec& spec, int N) {
    const int kap = static_cast<int>(spec.res.kappa);
    const int vkap = static_cast<int>(spec.res.varkappa);
    std::map<int, std::array<TrigPoly, 2>> b;
    for (const auto& [k, pair] : spec.drift) {
        if (k > N) continue;
        b.emplace(k, std::array<TrigPoly, 2>{pair[0].substitute_phase(kap, vkap),
                                             pair[1].substitute_phase(kap, vkap)});
    }
    const double ratio = spec.res.ratio();
    for (int k = 1; k <= N; ++k) {
        const double sk = spec.phase.s_coeff(static_cast<std::size_t>(k));
        if (sk == 0.0) continue;
        auto it = b.find(k);
        if (it == b.end())
            it = b.emplace(k, std::array<TrigPoly, 2>{TrigPoly(vkap), TrigPoly(vkap)}).first;
        it->second[1] += TrigPoly::constant(-ratio * sk, vkap);
    }
    return b;
}

std::map<int, NoiseMatrix> slow_frame_noise(const SystemSpec& spec, int N) {
    const int kap = static_cast<int>(spec.res.kappa);
    const int vkap = static_cast<int>(spec.res.varkappa);
    std::map<int, NoiseMatrix> B;
    for (const auto& [k, mat] : spec.noise) {
        if (k > N + spec.p) continue;
        NoiseMatrix out{{{TrigPoly(vkap), TrigPoly(vkap)}, {TrigPoly(vkap), TrigPoly(vkap)}}};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out[i][j] = mat[i][j].substitute_phase(kap, vkap);
        B.emplace(k, out);
    }
    return B;
}

AveragedSystem average_first(const SystemSpec& spec, int N) {
    spec.validate();
    if (N < spec.n)
        throw std::invalid_argument("average_first: N must be >= n");
    if (N > spec.env.m())
        throw std::invalid_argument("average_first: N exceeds the envelope order m = " +
                                    std::to_string(spec.env.m()));
    const int den = static_cast<int>(spec.res.varkappa);
    const double s0 = spec.res.s0;
    const double eps2 = spec.eps * spec.eps;

    AveragedSystem avg;
    avg.N = N;
    avg.n = spec.n;
    avg.p = spec.p;
    avg.res = spec.res;
    avg.env = spec.env;
    avg.phase = spec.phase;
    avg.eps = spec.eps;
    avg.R_max = spec.R_max;
    avg.r_min = spec.r_min;
    avg.b = slow_frame_drift(spec, N);
    avg.B = slow_frame_noise(spec, N);

    for (int k = 1; k <= N; ++k) {
        TrigPoly h1 = composition_terms(avg.Lambda, avg.u, avg.v, k, den);
        TrigPoly h2 = composition_terms(avg.Omega, avg.u, avg.v, k, den);
        for (int j = 1; j < k; ++j) {
            const TrigPoly& uk = series_at(avg.u, k - j, den);
            const TrigPoly& vk = series_at(avg.v, k - j, den);
            if (uk.empty() && vk.empty()) continue;
            auto itb = avg.b.find(j);
            const double sj = spec.phase.s_coeff(static_cast<std::size_t>(j));
            auto transport = [&](const TrigPoly& w) {
                TrigPoly t(den);
                if (itb != avg.b.end()) {
                    if (!itb->second[0].empty()) t += itb->second[0] * w.diff(TrigPoly::Var::r);
                    if (!itb->second[1].empty()) t += itb->second[1] * w.diff(TrigPoly::Var::psi);
                }
                if (sj != 0.0) t += w.diff(TrigPoly::Var::S).scaled(sj);
                return t;
            };
            h1 -= transport(uk);
            h2 -= transport(vk);
        }
        if (eps2 != 0.0 && k >= 2 * spec.p + 1) {
            for (int i = spec.p; i <= k - spec.p - 1; ++i) {
                auto iti = avg.B.find(i);
                if (iti == avg.B.end()) continue;
                for (int j = spec.p; i + j <= k - 1; ++j) {
                    auto itj = avg.B.find(j);
                    if (itj == avg.B.end()) continue;
                    const int l = k - i - j;
                    const TrigPoly& ul = series_at(avg.u, l, den);
                    const TrigPoly& vl = series_at(avg.v, l, den);
                    if (!ul.empty())
                        h1 -= hessian_trace(iti->second, ul, itj->second, den).scaled(0.5 * eps2);
                    if (!vl.empty())
                        h2 -= hessian_trace(iti->second, vl, itj->second, den).scaled(0.5 * eps2);
                }
            }
        }
        const auto itb = avg.b.find(k);
        const TrigPoly bk1 = itb != avg.b.end() ? itb->second[0] : zero_poly(den);
        const TrigPoly bk2 = itb != avg.b.end() ? itb->second[1] : zero_poly(den);
        const TrigPoly g1 = bk1 - h1;
        const TrigPoly g2 = bk2 - h2;
        avg.Lambda.emplace(k, g1.average_S());
        avg.Omega.emplace(k, g2.average_S());
        avg.u.emplace(k, (avg.Lambda.at(k) - g1).antiderivative_S().scaled(1.0 / s0));
        avg.v.emplace(k, (avg.Omega.at(k) - g2).antiderivative_S().scaled(1.0 / s0));
    }

    const QInfo qi = find_q(avg);
    avg.q = qi.q;
    avg.omega_q_constant = qi.constant;
    return avg;
}

QInfo find_q(const AveragedSystem& avg) {
    for (int k = 1; k <= avg.N; ++k) {
        const TrigPoly& O = avg.omega_at(k);
        if (O.empty()) continue;
        bool constant = true;
        for (const auto& t : O.terms())
            if (t.kind != TrigKind::Const || t.rpow != 0) constant = false;
        return {k, constant};
    }
    return {std::nullopt, false};
}

const TrigPoly& SecondAveraged::f_at(int k) const {
    return series_at(F, k, static_cast<int>(res.varkappa));
}

double SecondAveraged::f_hat(double z, double t) const {
    double acc = 0.0;
    for (const auto& [k, Fk] : F)
        if (!Fk.empty()) acc += env.mu_pow(k, t) * Fk.eval(z, 0.0, 0.0);
    return acc;
}

double SecondAveraged::g_leading(double t) const {
    return -res.ratio() * s_q * env.mu_pow(q, t);
}

SecondAveraged average_second(const AveragedSystem& avg) {
    if (!avg.q)
        throw std::invalid_argument("average_second: no resonant phase dynamics (all Omega_k zero)");
    const int q = *avg.q;
    const int n = avg.n, p = avg.p, N = avg.N;
    const double s_q = avg.s_coeff(q);
    if (!(n > q))
        throw std::invalid_argument("average_second: requires n > q");
    if (!(2 * p > q))
        throw std::invalid_argument("average_second: requires 2p > q");
    if (s_q == 0.0)
        throw std::invalid_argument("average_second: requires s_q != 0");
    const int den = static_cast<int>(avg.res.varkappa);
    const double eps2 = avg.eps * avg.eps;

    SecondAveraged out;
    out.N = N;
    out.n = n;
    out.p = p;
    out.q = q;
    out.s_q = s_q;
    out.res = avg.res;
    out.env = avg.env;
    out.phase = avg.phase;
    out.eps = avg.eps;
    out.R_max = avg.R_max;
    out.r_min = avg.r_min;

    // Composed diffusion coefficients C_k, needed by the epsilon^2 traces:
    // sum mu^k C_k(U_N, V_N, S) = (I + sum mu^i J(u_i, v_i)) * (sum mu^j B_j).
    const int c_max = N - p - (n - q);
    if (eps2 != 0.0 && c_max >= p) {
        std::array<Series, 4> centry;  // per-entry series of C
        for (int k = p; k <= c_max; ++k) {
            NoiseMatrix jb{{{TrigPoly(den), TrigPoly(den)}, {TrigPoly(den), TrigPoly(den)}}};
            auto itB = avg.B.find(k);
            if (itB != avg.B.end()) jb = itB->second;
            for (int i = 1; k - i >= p; ++i) {
                auto itu = avg.u.find(i);
                auto itv = avg.v.find(i);
                auto itBj = avg.B.find(k - i);
                if (itBj == avg.B.end()) continue;
                const TrigPoly& ui = itu != avg.u.end() ? itu->second : zero_poly(den);
                const TrigPoly& vi = itv != avg.v.end() ? itv->second : zero_poly(den);
                const TrigPoly ur = ui.diff(TrigPoly::Var::r), up = ui.diff(TrigPoly::Var::psi);
                const TrigPoly vr = vi.diff(TrigPoly::Var::r), vp = vi.diff(TrigPoly::Var::psi);
                for (int c = 0; c < 2; ++c) {
                    jb[0][c] += ur * itBj->second[0][c] + up * itBj->second[1][c];
                    jb[1][c] += vr * itBj->second[0][c] + vp * itBj->second[1][c];
                }
            }
            NoiseMatrix ck{{{TrigPoly(den), TrigPoly(den)}, {TrigPoly(den), TrigPoly(den)}}};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    const int idx = 2 * i + j;
                    ck[i][j] = jb[i][j] - composition_terms(centry[idx], avg.u, avg.v, k, den);
                    centry[idx].emplace(k, ck[i][j]);
                }
            out.C.emplace(k, ck);
        }
    }

    for (int k = n; k <= N; ++k) {
        // Composition terms of the already-known F_j under the shift E.
        Series dummyV;  // E shifts r only
        TrigPoly gk = composition_terms(out.F, out.e, dummyV, k, den);
        // Transport by the averaged field.
        for (const auto& [j, ej] : out.e) {
            if (ej.empty()) continue;
            const int i = k - j;
            if (i >= n) {
                const TrigPoly& Li = avg.lambda_at(i);
                if (!Li.empty()) gk -= Li * ej.diff(TrigPoly::Var::r);
            }
            if (i >= q + 1) {
                const TrigPoly& Oi = avg.omega_at(i);
                if (!Oi.empty()) gk -= Oi * ej.diff(TrigPoly::Var::psi);
            }
        }
        // Epsilon^2 traces with the composed diffusion. The S-oscillating part
        // cannot be matched by an S-independent generator; only the S-mean
        // enters here.
        if (eps2 != 0.0) {
            for (const auto& [i, Ci] : out.C) {
                for (const auto& [j, Cj] : out.C) {
                    const int l = k - i - j;
                    if (l < n - q) continue;
                    auto ite = out.e.find(l);
                    if (ite == out.e.end() || ite->second.empty()) continue;
                    gk -= hessian_trace(Ci, ite->second, Cj, den).scaled(0.5 * eps2).average_S();
                }
            }
        }
        const TrigPoly W = avg.lambda_at(k) - gk;
        const TrigPoly Fk = W.average_psi();
        out.F.emplace(k, Fk);
        out.e.emplace(k - q, (W - Fk).antiderivative_psi()
                                  .scaled(static_cast<double>(avg.res.varkappa) /
                                          (static_cast<double>(avg.res.kappa) * s_q)));
    }
    return out;
}

}  // namespace isores
