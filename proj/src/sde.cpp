#include "isores/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace isores {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_pm_pi(double x) {
    double y = std::fmod(x, kTwoPi);
    if (y > kPi) y -= kTwoPi;
    if (y < -kPi) y += kTwoPi;
    return y;
}

struct Recorder {
    PathRecord& rec;
    int stride;
    long counter = 0;

    void operator()(double t, double a, double b, double rho, double psi, bool force = false) {
        if (force || counter % stride == 0) {
            if (!rec.samples.empty() && rec.samples.back().t == t) return;
            rec.samples.push_back({t, a, b, rho, psi});
        }
        ++counter;
    }
};

int auto_stride(long n_steps, int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(std::max(1L, (n_steps + 99999L) / 100000L));
}

}  // namespace

const char* path_status_name(PathStatus s) {
    switch (s) {
        case PathStatus::Completed: return "completed";
        case PathStatus::AbsorbedAtRmin: return "absorbed_at_rmin";
        case PathStatus::ExitedRmax: return "exited_Rmax";
    }
    return "?";
}

double SimConfig::resolved_dt(double nu0) const {
    if (dt > 0.0) return dt;
    return 2.5e-3 * (kTwoPi / nu0);
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 sm{master + 0x9E3779B97F4A7C15ULL * (index + 1)};
    return sm.next();
}

double NormalStream::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller with u1 in (0, 1]
    const double u1 = (static_cast<double>(rng_.next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = rng_.uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    cached_ = mag * std::sin(kTwoPi * u2);
    has_cached_ = true;
    return mag * std::cos(kTwoPi * u2);
}

PathRecord simulate_cartesian(const CartesianSpec& cs, const SimConfig& cfg, PolarIC ic,
                              NormalStream& noise) {
    const double ratio = cs.res.ratio();
    const double h0 = cfg.resolved_dt(cs.res.nu0);
    const double R_max = cfg.R_max > 0.0 ? cfg.R_max : cs.R_max;
    const long n_steps = static_cast<long>(std::ceil((cfg.t_end - cfg.t_start) / h0 - 1e-9));
    PathRecord rec;
    Recorder record{rec, auto_stride(n_steps, cfg.record_stride)};

    double t = cfg.t_start;
    double phi = ic.psi + ratio * cs.phase.S(t, cs.env);
    double x1 = ic.rho * std::cos(phi);
    double x2 = -ic.rho * std::sin(phi);
    double phi_unw = phi;
    double phi_raw_prev = std::atan2(-x2, x1);
    record(t, x1, x2, ic.rho, ic.psi, true);

    for (long step = 0; step < n_steps; ++step) {
        const double h = std::min(h0, cfg.t_end - t);
        const double S = cs.phase.S(t, cs.env);
        const double det = cs.env.mu_pow(cs.n, t) * cs.eval_f(x1, x2, S);
        double kick = 0.0;
        if (cs.eps > 0.0)
            kick = cs.eps * cs.env.mu_pow(cs.p, t) * cs.eval_g(x1, S) * std::sqrt(h) *
                   noise.next();
        // exact rotation of the harmonic core, perturbation added Euler-style
        const double c = std::cos(h), s = std::sin(h);
        const double x1n = x1 * c + x2 * s;
        const double x2n = -x1 * s + x2 * c + h * det + kick;
        x1 = x1n;
        x2 = x2n;
        t += h;

        const double phi_raw = std::atan2(-x2, x1);
        phi_unw += wrap_pm_pi(phi_raw - phi_raw_prev);
        phi_raw_prev = phi_raw;
        const double rho = std::sqrt(x1 * x1 + x2 * x2);
        const double psi = phi_unw - ratio * cs.phase.S(t, cs.env);
        const bool last = step == n_steps - 1;
        if (rho >= R_max) {
            rec.status = PathStatus::ExitedRmax;
            record(t, x1, x2, rho, psi, true);
            return rec;
        }
        record(t, x1, x2, rho, psi, last);
    }
    return rec;
}

namespace {

template <typename NoisePair>
PathRecord polar_core(const SystemSpec& spec, const SimConfig& cfg, PolarIC ic,
                      NoisePair&& next_dW) {
    const double ratio = spec.res.ratio();
    const double h0 = cfg.resolved_dt(spec.res.nu0);
    const double r_min = cfg.r_min > 0.0 ? cfg.r_min : spec.r_min;
    const double R_max = cfg.R_max > 0.0 ? cfg.R_max : spec.R_max;
    if (!(ic.rho > r_min) || !(ic.rho < R_max))
        throw std::invalid_argument("simulate_polar: initial rho must lie in (r_min, R_max)");
    const long n_steps = static_cast<long>(std::ceil((cfg.t_end - cfg.t_start) / h0 - 1e-9));
    PathRecord rec;
    Recorder record{rec, auto_stride(n_steps, cfg.record_stride)};

    double t = cfg.t_start;
    double rho = ic.rho;
    double phi = ic.psi + ratio * spec.phase.S(t, spec.env);
    record(t, rho, phi, rho, ic.psi, true);

    for (long step = 0; step < n_steps; ++step) {
        const double h = std::min(h0, cfg.t_end - t);
        const double S = spec.phase.S(t, spec.env);
        const double d1 = spec.drift1(rho, phi, S, t);
        const double d2 = spec.res.nu0 + spec.drift2(rho, phi, S, t);
        double n1 = 0.0, n2 = 0.0;
        if (spec.eps > 0.0) {
            const auto A = spec.noise_at(rho, phi, S, t);
            const auto dW = next_dW(step, h);
            n1 = spec.eps * (A[0][0] * dW[0] + A[0][1] * dW[1]);
            n2 = spec.eps * (A[1][0] * dW[0] + A[1][1] * dW[1]);
        }
        rho += h * d1 + n1;
        phi += h * d2 + n2;
        t += h;
        const double psi = phi - ratio * spec.phase.S(t, spec.env);
        const bool last = step == n_steps - 1;
        if (rho <= r_min) {
            rec.status = PathStatus::AbsorbedAtRmin;
            record(t, rho, phi, rho, psi, true);
            return rec;
        }
        if (rho >= R_max) {
            rec.status = PathStatus::ExitedRmax;
            record(t, rho, phi, rho, psi, true);
            return rec;
        }
        record(t, rho, phi, rho, psi, last);
    }
    return rec;
}

}  // namespace

PathRecord simulate_polar(const SystemSpec& spec, const SimConfig& cfg, PolarIC ic,
                          NormalStream& noise) {
    return polar_core(spec, cfg, ic, [&](long, double h) {
        const double sq = std::sqrt(h);
        const double xi1 = noise.next();
        const double xi2 = noise.next();
        return std::array<double, 2>{sq * xi1, sq * xi2};
    });
}

PathRecord simulate_polar_with_increments(const SystemSpec& spec, const SimConfig& cfg,
                                          PolarIC ic,
                                          const std::vector<std::array<double, 2>>& dW) {
    return polar_core(spec, cfg, ic, [&](long step, double) {
        if (step >= static_cast<long>(dW.size()))
            throw std::invalid_argument("simulate_polar_with_increments: increment list too short");
        return dW[static_cast<std::size_t>(step)];
    });
}

namespace {

using Field = std::function<std::array<double, 2>(double t, double r, double psi)>;

std::array<double, 2> rk4_step(const Field& f, double t, std::array<double, 2> y, double h) {
    const auto k1 = f(t, y[0], y[1]);
    const auto k2 = f(t + 0.5 * h, y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]);
    const auto k3 = f(t + 0.5 * h, y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]);
    const auto k4 = f(t + h, y[0] + h * k3[0], y[1] + h * k3[1]);
    return {y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

PathRecord rk4_adaptive(const Field& f, const SimConfig& cfg, PolarIC ic, double r_min,
                        double R_max, double h_init) {
    PathRecord rec;
    Recorder record{rec, std::max(1, cfg.record_stride)};
    const double record_interval =
        std::max((cfg.t_end - cfg.t_start) / 100000.0, 1e-12);

    double t = cfg.t_start;
    std::array<double, 2> y{ic.rho, ic.psi};
    record(t, y[0], y[1], y[0], y[1], true);
    double next_record = t + record_interval;
    double h = h_init;
    const double tol = 1e-8;

    while (t < cfg.t_end - 1e-12) {
        h = std::min(h, cfg.t_end - t);
        const auto full = rk4_step(f, t, y, h);
        const auto half = rk4_step(f, t + 0.5 * h, rk4_step(f, t, y, 0.5 * h), 0.5 * h);
        const double err =
            std::max(std::abs(full[0] - half[0]), std::abs(full[1] - half[1]));
        if (err > tol && h > 1e-10) {
            h *= 0.5;
            continue;
        }
        // local extrapolation of the step-doubling pair
        y = {half[0] + (half[0] - full[0]) / 15.0, half[1] + (half[1] - full[1]) / 15.0};
        t += h;
        // proportional step control aiming well below the halving threshold
        const double target = tol / 20.0;
        const double factor =
            err > 0.0 ? 0.9 * std::pow(target / err, 0.2) : 2.0;
        h *= std::clamp(factor, 0.3, 2.0);
        if (y[0] <= r_min) {
            rec.status = PathStatus::AbsorbedAtRmin;
            record(t, y[0], y[1], y[0], y[1], true);
            return rec;
        }
        if (y[0] >= R_max) {
            rec.status = PathStatus::ExitedRmax;
            record(t, y[0], y[1], y[0], y[1], true);
            return rec;
        }
        if (t >= next_record || t >= cfg.t_end - 1e-12) {
            record(t, y[0], y[1], y[0], y[1], true);
            while (next_record <= t) next_record += record_interval;
        }
    }
    return rec;
}

}  // namespace

PathRecord simulate_truncated(const AveragedSystem& avg, const SimConfig& cfg, PolarIC ic) {
    const double r_min = cfg.r_min > 0.0 ? cfg.r_min : avg.r_min;
    const double R_max = cfg.R_max > 0.0 ? cfg.R_max : avg.R_max;
    Field f = [&avg](double t, double r, double psi) {
        return std::array<double, 2>{avg.lambda_hat(r, psi, t), avg.omega_hat(r, psi, t)};
    };
    return rk4_adaptive(f, cfg, ic, r_min, R_max, cfg.dt > 0.0 ? cfg.dt : 0.1);
}

PathRecord simulate_truncated2(const SecondAveraged& second, const SimConfig& cfg, PolarIC ic) {
    const double r_min = cfg.r_min > 0.0 ? cfg.r_min : second.r_min;
    const double R_max = cfg.R_max > 0.0 ? cfg.R_max : second.R_max;
    Field f = [&second](double t, double z, double) {
        return std::array<double, 2>{second.f_hat(z, t), second.g_leading(t)};
    };
    return rk4_adaptive(f, cfg, ic, r_min, R_max, cfg.dt > 0.0 ? cfg.dt : 0.1);
}

PathRecord simulate_limiting(const AveragedSystem& avg, const SimConfig& cfg, PolarIC ic) {
    if (!avg.q) throw std::invalid_argument("simulate_limiting: no q (all Omega_k vanish)");
    const int q = *avg.q;
    const double r_min = cfg.r_min > 0.0 ? cfg.r_min : avg.r_min;
    const double R_max = cfg.R_max > 0.0 ? cfg.R_max : avg.R_max;
    const TrigPoly& L = avg.lambda_at(avg.n);
    const TrigPoly& O = avg.omega_at(q);
    const int n = avg.n;
    Field f = [&, n, q](double t, double r, double psi) {
        return std::array<double, 2>{avg.env.mu_pow(n, t) * L.eval(r, psi, 0.0),
                                     avg.env.mu_pow(q, t) * O.eval(r, psi, 0.0)};
    };
    return rk4_adaptive(f, cfg, ic, r_min, R_max, cfg.dt > 0.0 ? cfg.dt : 0.1);
}

double metric_ML_sup(const PathRecord& path, const Envelope& env,
                     const std::function<double(double)>& rho_star,
                     const std::function<double(double)>& phi_star, int n, int q,
                     double family_period, Window w) {
    double sup = -1.0;
    bool branch_set = false;
    double branch = 0.0;
    for (const auto& s : path.samples) {
        if (s.t < w.t_lo - 1e-12 || s.t > w.t_hi + 1e-12) continue;
        if (!branch_set) {
            branch = family_period > 0.0
                         ? family_period * std::round((s.psi - phi_star(s.t)) / family_period)
                         : 0.0;
            branch_set = true;
        }
        const double dr = s.rho - rho_star(s.t);
        const double dp = s.psi - phi_star(s.t) - branch;
        const double weight = env.mu_pow(n - q, s.t);
        const double v = std::sqrt(dr * dr + dp * dp * weight);
        sup = std::max(sup, v);
    }
    if (sup < 0.0)
        throw std::invalid_argument("metric_ML_sup: window contains no recorded samples");
    return sup;
}

double metric_MD_sup(const PathRecord& path, const std::function<double(double)>& rho_D,
                     Window w) {
    double sup = -1.0;
    for (const auto& s : path.samples) {
        if (s.t < w.t_lo - 1e-12 || s.t > w.t_hi + 1e-12) continue;
        sup = std::max(sup, std::abs(s.rho - rho_D(s.t)));
    }
    if (sup < 0.0)
        throw std::invalid_argument("metric_MD_sup: window contains no recorded samples");
    return sup;
}

int resolve_thread_count(int requested) {
    int n = requested;
    if (const char* env = std::getenv("ISORES_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = (n > 0) ? std::min(n, cap) : cap;
    }
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

ExceedanceStats ensemble(const std::function<PathRecord(int, NormalStream&)>& run_path,
                         const std::function<double(const PathRecord&)>& sup_metric,
                         int n_paths, std::uint64_t master_seed, double eps1, Window w,
                         int threads, std::vector<PathSummary>* summaries,
                         const std::function<void(int, const PathRecord&)>& on_path) {
    std::vector<PathSummary> local(static_cast<std::size_t>(n_paths));
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n_paths) break;
            NormalStream stream(path_seed(master_seed, static_cast<std::uint64_t>(i)));
            const PathRecord rec = run_path(i, stream);
            PathSummary& s = local[static_cast<std::size_t>(i)];
            s.status = rec.status;
            s.sup_metric = sup_metric(rec);
            if (!rec.samples.empty()) {
                s.final_t = rec.samples.back().t;
                s.final_rho = rec.samples.back().rho;
                s.final_psi = rec.samples.back().psi;
            }
            if (on_path) on_path(i, rec);
        }
    };
    const int nw = resolve_thread_count(threads);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int k = 0; k < nw; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    ExceedanceStats stats;
    stats.eps1 = eps1;
    stats.window = w;
    stats.n_total = n_paths;
    for (const auto& s : local) {
        const bool exceed = s.sup_metric >= eps1 || s.status == PathStatus::ExitedRmax;
        if (exceed) ++stats.n_exceed;
        if (s.status == PathStatus::AbsorbedAtRmin) ++stats.n_absorbed;
        if (s.status == PathStatus::ExitedRmax) ++stats.n_exited;
    }
    stats.p_hat = n_paths > 0 ? static_cast<double>(stats.n_exceed) / n_paths : 0.0;
    stats.ci95_halfwidth =
        n_paths > 0 ? 1.96 * std::sqrt(stats.p_hat * (1.0 - stats.p_hat) / n_paths) : 0.0;
    if (summaries) *summaries = std::move(local);
    return stats;
}

}  // namespace isores
