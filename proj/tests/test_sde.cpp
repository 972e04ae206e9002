#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "isores/analysis.hpp"
#include "isores/presets.hpp"
#include "isores/sde.hpp"
#include "test_support.hpp"

using namespace isores;
using testsup::kPi;

namespace {

// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
double ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

// 1-D polar test system dX = -X mu^2 dt + eps mu X dW1.
SystemSpec linear_polar(double eps) {
    SystemSpec spec;
    spec.res = {1, 1, 1.0, 1.0};
    spec.env = {EnvelopeFamily::Power, 0.25, 1.0};
    spec.phase.s = {1.0};
    spec.n = 2;
    spec.p = 1;
    spec.eps = eps;
    spec.R_max = 50.0;
    spec.r_min = 1e-9;
    spec.drift.emplace(2, std::array<TrigPoly, 2>{TrigPoly::constant(-1.0, 1, 1), TrigPoly(1)});
    NoiseMatrix A{{{TrigPoly::constant(1.0, 1, 1), TrigPoly(1)}, {TrigPoly(1), TrigPoly(1)}}};
    spec.noise.emplace(1, A);
    return spec;
}

// RK4 oracle for the deterministic Cartesian oscillator (test-side reference).
void rk4_cartesian(const CartesianSpec& cs, double& x1, double& x2, double t, double h) {
    auto f = [&](double t_, double y1, double y2, double& d1, double& d2) {
        d1 = y2;
        d2 = -y1 + cs.env.mu_pow(cs.n, t_) * cs.eval_f(y1, y2, cs.phase.S(t_, cs.env));
    };
    double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    f(t, x1, x2, k1a, k1b);
    f(t + 0.5 * h, x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b, k2a, k2b);
    f(t + 0.5 * h, x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b, k3a, k3b);
    f(t + h, x1 + h * k3a, x2 + h * k3b, k4a, k4b);
    x1 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
    x2 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
}

}  // namespace

TEST_CASE("unperturbed oscillator conserves the amplitude") {
    auto cs = make_ex0({{"A1", 0.0}, {"B0", 0.0}, {"B1", 0.0}, {"C0", 0.0}, {"eps", 0.0}});
    cs.g.clear();
    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 1.0 + 2.0 * kPi * 1e4;  // 10^4 periods
    cfg.dt = 1e-3;
    NormalStream noise(1);
    auto path = simulate_cartesian(cs, cfg, {1.3, 0.7}, noise);
    REQUIRE(path.status == PathStatus::Completed);
    double drift = 0.0;
    for (const auto& s : path.samples) drift = std::max(drift, std::abs(s.rho - 1.3));
    CHECK(drift < 1e-3);
}

TEST_CASE("deterministic Cartesian run tracks the RK4 reference") {
    auto cs = make_ex0({{"eps", 0.0}});
    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 1000.0;
    cfg.dt = 1e-3;
    cfg.record_stride = 1000;
    NormalStream noise(1);
    auto path = simulate_cartesian(cs, cfg, {1.0, 0.3}, noise);
    REQUIRE(path.status == PathStatus::Completed);

    const double phi0 = 0.3 + cs.res.ratio() * cs.phase.S(1.0, cs.env);
    double x1 = std::cos(phi0), x2 = -std::sin(phi0);
    double t = 1.0;
    double worst = 0.0;
    for (const auto& s : path.samples) {
        while (t < s.t - 1e-12) {
            const double h = std::min(0.05, s.t - t);
            rk4_cartesian(cs, x1, x2, t, h);
            t += h;
        }
        worst = std::max(worst, std::abs(s.rho - std::hypot(x1, x2)));
    }
    CHECK(worst <= 5.0 * cfg.dt);
}

TEST_CASE("free polar rotation is exact") {
    SystemSpec spec;
    spec.res = {1, 2, 1.0, 2.0};
    spec.env = {EnvelopeFamily::Power, 0.25, 1.0};
    spec.phase.s = {2.0};
    spec.n = 2;
    spec.p = 1;
    spec.eps = 0.0;
    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 101.0;
    cfg.dt = 0.01;
    NormalStream noise(1);
    auto path = simulate_polar(spec, cfg, {1.2, 0.4}, noise);
    const auto& last = path.samples.back();
    CHECK(last.rho == doctest::Approx(1.2).epsilon(1e-14));
    // phi = phi0 + nu0 (t - t0) exactly; psi folds the phase drift back out
    const double phi0 = 0.4 + 0.5 * spec.phase.S(1.0, spec.env);
    const double phi_expect = phi0 + 1.0 * (last.t - 1.0);
    CHECK(last.b == doctest::Approx(phi_expect).epsilon(1e-12));
}

TEST_CASE("drift-only polar run tracks an RK4 reference") {
    auto spec = cartesian_to_polar(make_ex0({{"eps", 0.0}}));
    SimConfig cfg;
    cfg.t_start = 50.0;
    cfg.t_end = 450.0;
    cfg.dt = 2e-3;
    cfg.record_stride = 2000;
    NormalStream noise(1);
    auto path = simulate_polar(spec, cfg, {1.0, 0.5}, noise);
    REQUIRE(path.status == PathStatus::Completed);

    // reference: RK4 on (rho, phi) with the same vector field
    double rho = 1.0, phi = 0.5 + spec.res.ratio() * spec.phase.S(50.0, spec.env);
    double t = 50.0;
    auto f = [&](double t_, double y1, double y2, double& d1, double& d2) {
        const double S = spec.phase.S(t_, spec.env);
        d1 = spec.drift1(y1, y2, S, t_);
        d2 = spec.res.nu0 + spec.drift2(y1, y2, S, t_);
    };
    double worst = 0.0;
    for (const auto& s : path.samples) {
        while (t < s.t - 1e-12) {
            const double h = std::min(0.02, s.t - t);
            double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
            f(t, rho, phi, k1a, k1b);
            f(t + 0.5 * h, rho + 0.5 * h * k1a, phi + 0.5 * h * k1b, k2a, k2b);
            f(t + 0.5 * h, rho + 0.5 * h * k2a, phi + 0.5 * h * k2b, k3a, k3b);
            f(t + h, rho + h * k3a, phi + h * k3b, k4a, k4b);
            rho += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
            phi += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
            t += h;
        }
        worst = std::max(worst, std::abs(s.rho - rho));
    }
    CHECK(worst <= 5.0 * cfg.dt);
}

TEST_CASE("Cartesian and polar frames agree statistically") {
    auto cs = make_preset("fig-ex1");
    auto spec = cartesian_to_polar(cs);
    SimConfig cfg;
    cfg.t_start = 50.0;
    cfg.t_end = 350.0;
    const int n_paths = 200;
    std::vector<double> cart, polar;
    for (int i = 0; i < n_paths; ++i) {
        NormalStream sa(path_seed(0xFACE01, static_cast<std::uint64_t>(i)));
        auto pa = simulate_cartesian(cs, cfg, {1.0, 0.0}, sa);
        if (pa.status == PathStatus::Completed) cart.push_back(pa.samples.back().rho);
        NormalStream sb(path_seed(0xFACE02, static_cast<std::uint64_t>(i)));
        auto pb = simulate_polar(spec, cfg, {1.0, 0.0}, sb);
        if (pb.status == PathStatus::Completed) polar.push_back(pb.samples.back().rho);
    }
    REQUIRE(cart.size() > 190);
    REQUIRE(polar.size() > 190);
    CHECK(ks_pvalue(cart, polar) > 0.01);
}

TEST_CASE("truncated flow matches the closed-form linear decay") {
    AveragedSystem avg;
    avg.N = 2;
    avg.n = 2;
    avg.p = 1;
    avg.res = {1, 2, 1.0, 2.0};
    avg.env = {EnvelopeFamily::Power, 0.25, 1.0};
    avg.phase.s = {2.0};
    avg.R_max = 4.0;
    avg.r_min = 1e-12;
    avg.Lambda.emplace(2, TrigPoly::constant(-1.0, 2, 1));  // Lambda_2 = -r
    avg.Omega.emplace(2, TrigPoly(2));
    avg.q = std::nullopt;

    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 16.0;
    cfg.frame = Frame::Truncated;
    auto path = simulate_truncated(avg, cfg, {1.0, 0.8});
    const auto& last = path.samples.back();
    const double expect = std::exp(-avg.env.gamma(2, 16.0));
    CHECK(std::abs(last.rho - expect) / expect < 1e-8);
    CHECK(last.psi == doctest::Approx(0.8));  // no phase dynamics
}

TEST_CASE("drift preset: amplitude settles, phase falls like the gamma integral") {
    auto cs = make_preset("fig-ex11");
    auto avg = average_first(cartesian_to_polar(cs), 2);
    auto second = average_second(avg);
    auto reports = classify_drift(second);
    REQUIRE(reports.size() == 1);
    const double rho0 = std::sqrt(8.0 / 3.0 + 0.25 * 0.5 * 0.5 * 2.0);

    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 1e4;
    cfg.frame = Frame::Truncated2;
    auto path = simulate_truncated2(second, cfg, {1.0, 0.0});
    REQUIRE(path.status == PathStatus::Completed);
    CHECK(std::abs(path.samples.back().rho - rho0) < 0.05);

    // the first-averaged flow drifts in phase like -(kappa s_q/varkappa) gamma_q
    cfg.frame = Frame::Truncated;
    auto full = simulate_truncated(avg, cfg, {1.0, 0.0});
    const double gamma1 = avg.env.gamma(1, 1e4);
    const double lead = reports[0].phi_gamma_coeff * gamma1;
    CHECK(full.samples.back().psi / lead == doctest::Approx(1.0).epsilon(0.1));
    CHECK(full.samples.back().psi < 0.0);
}

TEST_CASE("deviation metrics") {
    auto avg = average_first(cartesian_to_polar(make_ex0({})), 2);
    auto rep = classify_fixed_point(std::sqrt(1.9), kPi / 4.0, avg);
    auto sol = particular_solution(rep, avg);
    auto rho_star = [&](double t) { return sol.rho_star(t, avg.env); };
    auto phi_star = [&](double t) { return sol.phi_star(t, avg.env); };

    // a path resting exactly on the particular solution
    PathRecord on;
    for (int i = 0; i <= 100; ++i) {
        const double t = 100.0 + i;
        on.samples.push_back({t, 0.0, 0.0, rho_star(t), phi_star(t)});
    }
    CHECK(metric_ML_sup(on, avg.env, rho_star, phi_star, rep.n, rep.q, rep.family_period,
                        {100.0, 200.0}) == doctest::Approx(0.0));

    // a constant radial offset of delta
    PathRecord off = on;
    for (auto& s : off.samples) s.rho += 0.07;
    CHECK(metric_ML_sup(off, avg.env, rho_star, phi_star, rep.n, rep.q, rep.family_period,
                        {100.0, 200.0}) == doctest::Approx(0.07));
    CHECK(metric_MD_sup(off, [&](double) { return rep.rho0; }, {100.0, 200.0}) ==
          doctest::Approx(0.07));

    // q = n: the metric is the plain Euclidean distance, branch-reduced
    PathRecord both = on;
    for (auto& s : both.samples) {
        s.rho += 0.03;
        s.psi += 0.04 + rep.family_period;  // a full family shift must not count
    }
    CHECK(metric_ML_sup(both, avg.env, rho_star, phi_star, rep.n, rep.q, rep.family_period,
                        {100.0, 200.0}) == doctest::Approx(std::hypot(0.03, 0.04)));

    CHECK_THROWS_AS(metric_ML_sup(on, avg.env, rho_star, phi_star, rep.n, rep.q,
                                  rep.family_period, {1e6, 2e6}),
                    std::invalid_argument);
}

TEST_CASE("ensemble basics: zero noise, determinism, worker independence") {
    auto cs = make_preset("fig-ex1", {{"eps", 0.0}});
    auto avg = average_first(cartesian_to_polar(make_preset("fig-ex1")), 2);
    auto rep = classify_fixed_point(std::sqrt(1.9), kPi / 4.0, avg);
    auto sol = particular_solution(rep, avg);

    SimConfig cfg;
    cfg.t_start = 50.0;
    cfg.t_end = 250.0;
    const Window w{50.0, 250.0};
    auto run = [&](int, NormalStream& s) {
        return simulate_cartesian(cs, cfg, {rep.rho0, rep.phi0}, s);
    };
    auto sup = [&](const PathRecord& p) {
        return metric_ML_sup(
            p, avg.env, [&](double t) { return sol.rho_star(t, avg.env); },
            [&](double t) { return sol.phi_star(t, avg.env); }, rep.n, rep.q,
            rep.family_period, w);
    };
    std::vector<PathSummary> s1, s2;
    auto st1 = ensemble(run, sup, 40, 0xBEEF, 0.3, w, 1, &s1);
    auto st2 = ensemble(run, sup, 40, 0xBEEF, 0.3, w, 3, &s2);
    CHECK(st1.p_hat == 0.0);  // deterministic run stays locked
    CHECK(st1.n_exceed == 0);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1[i].sup_metric == s2[i].sup_metric);  // bitwise, any worker count
        CHECK(s1[i].final_rho == s2[i].final_rho);
    }
}

TEST_CASE("ensemble confidence interval scales like 1/sqrt(n)") {
    auto spec = linear_polar(0.3);
    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 9.0;
    cfg.dt = 0.005;
    const Window w{1.0, 9.0};
    auto rho_det = [&](double t) { return std::exp(-spec.env.gamma(2, t)); };
    auto run = [&](int, NormalStream& s) { return simulate_polar(spec, cfg, {1.0, 0.0}, s); };
    auto sup = [&](const PathRecord& p) { return metric_MD_sup(p, rho_det, w); };
    // eps1 near the median sup so p_hat is well inside (0, 1)
    auto a = ensemble(run, sup, 150, 0xC0FFEE, 0.186, w, 2);
    auto b = ensemble(run, sup, 300, 0xC0FFEE, 0.186, w, 2);
    REQUIRE(a.p_hat > 0.15);
    REQUIRE(a.p_hat < 0.85);
    const double expected = a.ci95_halfwidth / std::sqrt(2.0);
    CHECK(std::abs(b.ci95_halfwidth - expected) <= 0.3 * expected);
}

TEST_CASE("strong order of the polar stepper is at least one half") {
    auto spec = linear_polar(0.3);
    const double T0 = 10.0, T1 = 12.56;
    const int n_coarse = 64;
    const double dt = (T1 - T0) / n_coarse;
    const int refine = 64;
    const double dt_fine = dt / refine;

    double err_c = 0.0, err_h = 0.0;
    const int n_paths = 64;
    for (int ip = 0; ip < n_paths; ++ip) {
        NormalStream s(path_seed(0xD1CE, static_cast<std::uint64_t>(ip)));
        std::vector<std::array<double, 2>> fine(n_coarse * refine);
        for (auto& dw : fine) {
            const double x1 = s.next(), x2 = s.next();
            dw = {std::sqrt(dt_fine) * x1, std::sqrt(dt_fine) * x2};
        }
        auto aggregate = [&](int factor) {
            std::vector<std::array<double, 2>> out(fine.size() / factor, {0.0, 0.0});
            for (std::size_t i = 0; i < fine.size(); ++i) {
                out[i / factor][0] += fine[i][0];
                out[i / factor][1] += fine[i][1];
            }
            return out;
        };
        SimConfig cfg;
        cfg.t_start = T0;
        cfg.t_end = T1;
        cfg.record_stride = 1 << 20;  // endpoints only
        auto run_with = [&](double h, const std::vector<std::array<double, 2>>& dw) {
            SimConfig c = cfg;
            c.dt = h;
            return simulate_polar_with_increments(spec, c, {1.0, 0.0}, dw).samples.back().rho;
        };
        const double ref = run_with(dt_fine, fine);
        err_c += std::abs(run_with(dt, aggregate(refine)) - ref);
        err_h += std::abs(run_with(dt / 2, aggregate(refine / 2)) - ref);
    }
    err_c /= n_paths;
    err_h /= n_paths;
    CHECK(err_c / err_h >= 1.3);
}

TEST_CASE("slow phase is recorded without jumps") {
    auto cs = make_preset("fig-ex1");
    SimConfig cfg;
    cfg.t_start = 50.0;
    cfg.t_end = 650.0;
    NormalStream noise(path_seed(0xAB, 7));
    auto path = simulate_cartesian(cs, cfg, {0.6, 2.0}, noise);
    for (std::size_t i = 1; i < path.samples.size(); ++i)
        CHECK(std::abs(path.samples[i].psi - path.samples[i - 1].psi) < kPi);
}

TEST_CASE("absorption and exit statuses") {
    // strong inward drift absorbs at r_min
    SystemSpec in;
    in.res = {1, 1, 1.0, 1.0};
    in.env = {EnvelopeFamily::Power, 0.25, 1.0};
    in.phase.s = {1.0};
    in.n = 1;
    in.p = 1;
    in.r_min = 0.1;
    in.R_max = 3.0;
    in.drift.emplace(1, std::array<TrigPoly, 2>{TrigPoly::constant(-2.0, 1, 1), TrigPoly(1)});
    SimConfig cfg;
    cfg.t_start = 1.0;
    cfg.t_end = 200.0;
    cfg.dt = 0.01;
    NormalStream s1(1);
    auto absorbed = simulate_polar(in, cfg, {0.5, 0.0}, s1);
    CHECK(absorbed.status == PathStatus::AbsorbedAtRmin);
    CHECK(absorbed.samples.back().rho <= 0.1 + 1e-9);

    // strong outward drift exits at R_max
    SystemSpec out = in;
    out.drift[1][0] = TrigPoly::constant(2.0, 1, 1);
    NormalStream s2(1);
    auto exited = simulate_polar(out, cfg, {0.5, 0.0}, s2);
    CHECK(exited.status == PathStatus::ExitedRmax);
    CHECK(exited.samples.back().rho >= 3.0 - 1e-9);

    // initial conditions must lie strictly inside the annulus
    NormalStream s3(1);
    CHECK_THROWS_AS(simulate_polar(in, cfg, {0.05, 0.0}, s3), std::invalid_argument);
    CHECK_THROWS_AS(simulate_polar(in, cfg, {5.0, 0.0}, s3), std::invalid_argument);
}

TEST_CASE("locking metric weights the phase deviation when scales separate") {
    // q > n: the weight mu^{n-q} grows, so a fixed phase offset contributes
    // an increasing share of the metric
    Envelope env{EnvelopeFamily::Power, 0.25, 1.0};
    PathRecord path;
    for (int i = 0; i <= 10; ++i) {
        const double t = 100.0 + 10.0 * i;
        path.samples.push_back({t, 0.0, 0.0, 1.0, 0.02});
    }
    auto one = [](double) { return 1.0; };
    auto zero = [](double) { return 0.0; };
    const double sup_eq = metric_ML_sup(path, env, one, zero, 2, 2, 0.0, {100.0, 200.0});
    CHECK(sup_eq == doctest::Approx(0.02));  // q = n: plain Euclidean
    const double sup_sep = metric_ML_sup(path, env, one, zero, 2, 3, 0.0, {100.0, 200.0});
    // mu^{-1}(t) = t^{1/4} is largest at the window end
    CHECK(sup_sep == doctest::Approx(0.02 * std::pow(200.0, 0.125)));
}

TEST_CASE("drift-mode exceedance is small on the stability horizon at small noise") {
    const double eps = 0.05, l = 0.5, ts = 50.0;
    auto cs = make_preset("fig-ex11", {{"eps", eps}});
    auto avg = average_first(cartesian_to_polar(cs), 2);
    auto reports = classify_drift(average_second(avg));
    REQUIRE(reports.size() == 1);
    const double rho0 = reports[0].rho0;

    // c = min(2p, n+1) = 2 and mu^2 is not integrable: a finite horizon
    const auto hz = horizon_T_eps(avg.env, 2, ts, eps, l);
    REQUIRE_FALSE(hz.infinite);
    const Window w{ts, ts + hz.T};
    SimConfig cfg;
    cfg.t_start = ts;
    cfg.t_end = w.t_hi;
    auto run = [&](int, NormalStream& s) { return simulate_cartesian(cs, cfg, {rho0, 0.0}, s); };
    auto sup = [&](const PathRecord& p) {
        return metric_MD_sup(p, [&](double) { return rho0; }, w);
    };
    auto stats = ensemble(run, sup, 40, 0x7733, 0.2, w, 2);
    CHECK(stats.p_hat <= 0.1);
}

TEST_CASE("full oscillator obeys the averaged drift-mode predictions") {
    // deterministic drift preset: the raw Cartesian system, not the averaged
    // one, must settle to the predicted amplitude and lose phase like
    // -(kappa s_q / varkappa) gamma_q(t)
    auto cs = make_preset("fig-ex11", {{"eps", 0.0}});
    auto avg = average_first(cartesian_to_polar(cs), 2);
    auto reports = classify_drift(average_second(avg));
    REQUIRE(reports.size() == 1);
    const double rho0 = std::sqrt(8.0 / 3.0);

    SimConfig cfg;
    cfg.t_start = 10.0;
    cfg.t_end = 20000.0;
    cfg.dt = 4e-3;
    NormalStream unused(1);
    auto path = simulate_cartesian(cs, cfg, {1.2, 0.7}, unused);
    REQUIRE(path.status == PathStatus::Completed);
    const auto& last = path.samples.back();
    CHECK(std::abs(last.rho - rho0) < 0.05);
    const double gamma1 = avg.env.gamma_between(1, cfg.t_start, cfg.t_end);
    CHECK(last.psi / (reports[0].phi_gamma_coeff * gamma1) ==
          doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("drift-mode deviation shrinks with the noise level") {
    auto avg = average_first(cartesian_to_polar(make_preset("fig-ex11")), 2);
    auto reports = classify_drift(average_second(avg));
    REQUIRE(reports.size() == 1);
    const Window w{100.0, 700.0};
    SimConfig cfg;
    cfg.t_start = 50.0;
    cfg.t_end = 700.0;

    std::vector<double> medians;
    for (double eps : {0.5, 0.25, 0.125}) {
        auto cs = make_preset("fig-ex11", {{"eps", eps}});
        const double rho0 = std::sqrt(8.0 / 3.0 + eps * eps / 2.0);
        auto run = [&](int, NormalStream& s) {
            return simulate_cartesian(cs, cfg, {rho0, 0.0}, s);
        };
        auto sup = [&](const PathRecord& p) {
            return metric_MD_sup(p, [&](double) { return rho0; }, w);
        };
        std::vector<PathSummary> sums;
        ensemble(run, sup, 40, 0xFEED, 1e9, w, 2, &sums);
        std::vector<double> sups;
        for (const auto& s : sums) sups.push_back(s.sup_metric);
        std::sort(sups.begin(), sups.end());
        medians.push_back(sups[sups.size() / 2]);
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}
