#pragma once

// Reproducible numerical integration: Euler-Maruyama for the stochastic
// Cartesian and polar systems, adaptive RK4 for the truncated deterministic
// systems, deviation metrics and Monte Carlo exceedance statistics.
//
// RNG pinning (for cross-run and cross-language reproducibility at the
// statistical level): per-path state is derived from the master seed as
//   state = splitmix64 stream seeded with  master + 0x9E3779B97F4A7C15 * (index + 1)
// feeding the four words of a xoshiro256++ generator; uniforms are
// (x >> 11) * 2^-53 and standard normals come from the Box-Muller transform
// using u1 in (0, 1]. The polar stepper consumes two normals per step
// (xi1 for w1, then xi2 for w2); the Cartesian stepper consumes one.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "isores/averaging.hpp"
#include "isores/sysdef.hpp"

namespace isores {

struct SplitMix64 {
    std::uint64_t state = 0;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

struct Xoshiro256pp {
    std::array<std::uint64_t, 4> s{};

    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s) w = sm.next();
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t path_seed(std::uint64_t master, std::uint64_t index);

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
    double next();

private:
    Xoshiro256pp rng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

enum class Frame { Cartesian, Polar, Truncated, Truncated2, Limiting };
enum class PathStatus { Completed, AbsorbedAtRmin, ExitedRmax };

const char* path_status_name(PathStatus s);

struct SimConfig {
    double t_start = 50.0;
    double t_end = 3000.0;
    double dt = 0.0;         // 0 -> 2.5e-3 * (2 pi / nu0)
    Frame frame = Frame::Cartesian;
    std::uint64_t seed = 0x15095EEDULL;
    int n_paths = 1;
    int record_stride = 0;   // 0 -> auto, keeps at most ~1e5 samples per path
    double r_min = 0.0;      // 0 -> taken from the system definition
    double R_max = 0.0;

    double resolved_dt(double nu0) const;
};

struct PathSample {
    double t;
    double a, b;  // (x1, x2) in the Cartesian frame, (rho, phi) otherwise
    double rho;
    double psi;   // unwrapped slow phase phi - (kappa/varkappa) S(t)
};

struct PathRecord {
    std::vector<PathSample> samples;
    PathStatus status = PathStatus::Completed;
};

struct PolarIC {
    double rho = 1.0;
    double psi = 0.0;
};

PathRecord simulate_cartesian(const CartesianSpec& cs, const SimConfig& cfg, PolarIC ic,
                              NormalStream& noise);
PathRecord simulate_polar(const SystemSpec& spec, const SimConfig& cfg, PolarIC ic,
                          NormalStream& noise);
// Same stepper driven by externally supplied Wiener increments (one pair per
// step, not pre-scaled); used for strong-convergence studies.
PathRecord simulate_polar_with_increments(const SystemSpec& spec, const SimConfig& cfg,
                                          PolarIC ic,
                                          const std::vector<std::array<double, 2>>& dW);

// Deterministic truncated flows, integrated by step-doubling RK4 with local
// error control at 1e-8.
PathRecord simulate_truncated(const AveragedSystem& avg, const SimConfig& cfg, PolarIC ic);
PathRecord simulate_truncated2(const SecondAveraged& second, const SimConfig& cfg, PolarIC ic);
PathRecord simulate_limiting(const AveragedSystem& avg, const SimConfig& cfg, PolarIC ic);

struct Window {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

// sup over the window of sqrt((rho - rho*)^2 + (psi - phi*)^2 mu^{n-q});
// psi is reduced to the family branch nearest at the window start.
double metric_ML_sup(const PathRecord& path, const Envelope& env,
                     const std::function<double(double)>& rho_star,
                     const std::function<double(double)>& phi_star, int n, int q,
                     double family_period, Window w);
// sup over the window of |rho - rho_D|.
double metric_MD_sup(const PathRecord& path, const std::function<double(double)>& rho_D,
                     Window w);

struct PathSummary {
    PathStatus status = PathStatus::Completed;
    double sup_metric = 0.0;
    double final_t = 0.0;
    double final_rho = 0.0;
    double final_psi = 0.0;
};

struct ExceedanceStats {
    std::string metric;
    double eps1 = 0.0;
    Window window;
    int n_exceed = 0;
    int n_total = 0;
    int n_absorbed = 0;
    int n_exited = 0;
    double p_hat = 0.0;
    double ci95_halfwidth = 0.0;
};

// Runs n_paths independent paths with per-path seeds derived from the master
// seed, computes the sup metric for each and aggregates the exceedance of
// eps1 over the window. Paths that exit R_max count as exceedances. Path
// order is deterministic and independent of the worker count.
ExceedanceStats ensemble(
    const std::function<PathRecord(int index, NormalStream&)>& run_path,
    const std::function<double(const PathRecord&)>& sup_metric, int n_paths,
    std::uint64_t master_seed, double eps1, Window w, int threads,
    std::vector<PathSummary>* summaries = nullptr,
    const std::function<void(int, const PathRecord&)>& on_path = {});

int resolve_thread_count(int requested);  // honors ISORES_THREADS

}  // namespace isores
