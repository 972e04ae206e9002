// Command-line front end: system validation, averaging, regime analysis,
// parameter-plane partitions, path simulation, Monte Carlo exceedance
// statistics and canned figure scenarios.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isores/analysis.hpp"
#include "isores/averaging.hpp"
#include "isores/presets.hpp"
#include "isores/sde.hpp"
#include "json.hpp"

using namespace isores;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = 3.14159265358979323846;

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw CliError(3, "cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// shared input handling

struct InputOptions {
    std::string spec_file;
    std::string preset;
    std::vector<std::string> sets;

    void attach(CLI::App* cmd) {
        cmd->add_option("--spec", spec_file, "system definition JSON file");
        cmd->add_option("--preset,-p", preset, "built-in preset name");
        cmd->add_option("--set", sets, "preset parameter override K=V (repeatable)");
    }

    Overrides overrides() const {
        Overrides ov;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw CliError(2, "--set expects K=V, got '" + s + "'");
            try {
                ov[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
            } catch (const std::exception&) {
                throw CliError(2, "--set " + s + ": value is not a number");
            }
        }
        return ov;
    }

    // Cartesian form is available for presets only.
    std::optional<CartesianSpec> cartesian() const {
        if (preset.empty()) return std::nullopt;
        if (!is_preset_name(preset))
            throw CliError(2, "unknown preset '" + preset + "' (known: validate --list)");
        return make_preset(preset, overrides());
    }

    SystemSpec system() const {
        if (!spec_file.empty() && !preset.empty())
            throw CliError(2, "give either --spec or --preset, not both");
        if (!spec_file.empty()) {
            if (!sets.empty()) throw CliError(2, "--set applies to presets only");
            return load_system_spec_file(spec_file);
        }
        if (auto cs = cartesian()) return cartesian_to_polar(*cs);
        throw CliError(2, "an input system is required (--spec FILE or --preset NAME)");
    }

    ordered_json describe() const {
        ordered_json j;
        if (!spec_file.empty()) j["spec"] = spec_file;
        if (!preset.empty()) j["preset"] = preset;
        if (!sets.empty()) j["set"] = sets;
        return j;
    }
};

ordered_json provenance(const std::string& command, const ordered_json& config,
                        std::uint64_t seed) {
    ordered_json j;
    j["tool"] = "isores";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    return j;
}

std::string csv_provenance_line(const ordered_json& prov) {
    return "# provenance: " + prov.dump() + "\n";
}

// ---------------------------------------------------------------------------
// report serialization

ordered_json poly_json(const TrigPoly& p, const std::string& angle) {
    ordered_json terms = ordered_json::array();
    for (const auto& t : p.terms()) {
        ordered_json jt;
        jt["coeff"] = t.coeff;
        jt["rpow"] = t.rpow;
        jt["kind"] = t.kind == TrigKind::Const ? "const"
                     : t.kind == TrigKind::Cos ? "cos"
                                               : "sin";
        jt["jpsi"] = t.jpsi;
        jt["lnum"] = t.lnum;
        terms.push_back(jt);
    }
    ordered_json j;
    j["pretty"] = p.to_string(angle);
    j["denomS"] = p.denom_s();
    j["terms"] = terms;
    return j;
}

ordered_json averaging_json(const AveragedSystem& avg) {
    ordered_json j;
    ordered_json lam = ordered_json::object(), om = ordered_json::object();
    for (const auto& [k, L] : avg.Lambda) lam[std::to_string(k)] = poly_json(L, "psi");
    for (const auto& [k, O] : avg.Omega) om[std::to_string(k)] = poly_json(O, "psi");
    j["Lambda"] = lam;
    j["Omega"] = om;
    j["q"] = avg.q ? ordered_json(*avg.q) : ordered_json(nullptr);
    j["omega_q_constant"] = avg.omega_q_constant;
    if (avg.q && *avg.q < avg.n && 2 * avg.p > *avg.q && avg.s_coeff(*avg.q) != 0.0) {
        auto second = average_second(avg);
        ordered_json F = ordered_json::object();
        for (const auto& [k, Fk] : second.F) F[std::to_string(k)] = poly_json(Fk, "psi");
        j["F"] = F;
    }
    return j;
}

ordered_json complex_json(const std::complex<double>& z) {
    return ordered_json::array({z.real(), z.imag()});
}

ordered_json analyze_system(const AveragedSystem& avg) {
    ordered_json out;
    ordered_json fps = ordered_json::array();
    std::optional<FixedPointReport> first_stable;
    std::optional<ParticularSolution> first_sol;
    if (avg.q && *avg.q >= avg.n) {
        const auto roots = find_fixed_points(avg.lambda_at(avg.n), avg.omega_at(*avg.q),
                                             avg.r_min, avg.R_max);
        for (const auto& [r0, p0] : roots) {
            const auto rep = classify_fixed_point(r0, p0, avg);
            ordered_json jf;
            jf["rho0"] = rep.rho0;
            jf["phi0"] = rep.phi0;
            jf["family_period"] = rep.family_period;
            jf["verdict"] = verdict_name(rep.verdict);
            jf["residual"] = rep.residual;
            jf["lambda_n"] = rep.lambda_n;
            jf["xi_n"] = rep.xi_n;
            jf["eta_q"] = rep.eta_q;
            jf["omega_q"] = rep.omega_q;
            jf["D"] = rep.D;
            if (rep.verdict != Verdict::Degenerate) {
                jf["beta1"] = complex_json(rep.beta1);
                jf["beta2"] = complex_json(rep.beta2);
                jf["beta2_tilde"] = complex_json(rep.beta2_tilde);
                jf["alpha0"] = std::isfinite(rep.alpha0) ? ordered_json(rep.alpha0)
                                                         : ordered_json("inf");
            }
            jf["q_constraint_ok"] = rep.q_constraint_ok;
            jf["p_constraint_ok"] = rep.p_constraint_ok;
            jf["gamma_q_infinite"] = rep.gamma_q_infinite;
            if (rep.verdict == Verdict::LockingStable) {
                const auto sol = particular_solution(rep, avg);
                jf["rho_coeffs"] = sol.rho_coeffs;
                jf["phi_coeffs"] = sol.phi_coeffs;
                if (!first_stable) {
                    first_stable = rep;
                    first_sol = sol;
                }
            }
            fps.push_back(jf);
        }
    }
    out["fixed_points"] = fps;

    ordered_json drift = ordered_json::array();
    if (avg.q && *avg.q < avg.n && 2 * avg.p > *avg.q && avg.s_coeff(*avg.q) != 0.0) {
        for (const auto& rep : classify_drift(average_second(avg))) {
            ordered_json jd;
            jd["mode"] = "second_averaged";
            jd["rho0"] = rep.rho0;
            jd["xi_hat"] = rep.xi_stat;
            jd["threshold"] = rep.threshold;
            jd["condition_ok"] = rep.condition_ok;
            jd["hypotheses_ok"] = rep.hypotheses_ok;
            jd["q"] = rep.q;
            jd["phi_gamma_coeff"] = rep.phi_gamma_coeff;
            drift.push_back(jd);
        }
    } else if (avg.q) {
        for (const auto& rep : classify_drift_direct(avg)) {
            ordered_json jd;
            jd["mode"] = "direct";
            jd["rho0"] = rep.rho0;
            jd["sup_Xi"] = rep.xi_stat;
            jd["threshold"] = rep.threshold;
            jd["condition_ok"] = rep.condition_ok;
            jd["hypotheses_ok"] = rep.hypotheses_ok;
            jd["q"] = rep.q;
            jd["phi_gamma_coeff"] = rep.phi_gamma_coeff;
            drift.push_back(jd);
        }
    }
    out["drift"] = drift;

    if (first_stable) {
        const auto chk =
            lyapunov_check(*first_stable, *first_sol, avg, 0.0, 0.01, 0.2, {1e2, 1e3, 1e4});
        ordered_json jl;
        jl["alpha"] = chk.alpha;
        jl["B1"] = chk.B1;
        jl["B2"] = chk.B2;
        jl["B1_positive"] = chk.B1_positive;
        jl["max_dVdt"] = chk.max_dVdt;
        out["lyapunov"] = jl;
    } else {
        out["lyapunov"] = nullptr;
    }
    return out;
}

ordered_json system_summary(const SystemSpec& spec, const std::optional<int>& q) {
    ordered_json j;
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["eps"] = spec.eps;
    j["kappa"] = spec.res.kappa;
    j["varkappa"] = spec.res.varkappa;
    j["nu0"] = spec.res.nu0;
    j["s0"] = spec.res.s0;
    j["alpha"] = spec.env.alpha;
    j["m"] = spec.env.m();
    j["chi_m"] = spec.env.chi_m();
    j["R_max"] = spec.R_max;
    j["r_min"] = spec.r_min;
    if (q) j["q"] = *q;
    return j;
}

// ---------------------------------------------------------------------------
// path CSV output

void write_path_csv(const fs::path& file, const PathRecord& rec, Frame frame,
                    const ordered_json& prov) {
    std::string body = csv_provenance_line(prov);
    body += frame == Frame::Cartesian ? "t,x1,x2,rho,psi\n" : "t,rho,phi,rho,psi\n";
    for (const auto& s : rec.samples) {
        body += format_double(s.t) + "," + format_double(s.a) + "," + format_double(s.b) +
                "," + format_double(s.rho) + "," + format_double(s.psi) + "\n";
    }
    atomic_write(file, body);
}

std::string path_file_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d.csv", index);
    return buf;
}

// ---------------------------------------------------------------------------
// subcommand configs

struct SimOptions {
    double t_start = 50.0;
    double t_end = 3000.0;
    double dt = 0.0;
    std::uint64_t seed = 0x1505;
    int paths = 1;
    std::string frame = "cartesian";
    std::vector<std::string> ics;
    bool ic_lattice = false;
    std::string out_dir = "out";
    int threads = 0;

    void attach(CLI::App* cmd, bool with_frame = true) {
        cmd->add_option("--t-start", t_start, "start time");
        cmd->add_option("--t-end", t_end, "end time");
        cmd->add_option("--dt", dt, "time step (0 = default 2.5e-3 * 2 pi / nu0)");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--paths", paths, "number of paths");
        if (with_frame)
            cmd->add_option("--frame", frame,
                            "cartesian | polar | truncated | truncated2 | limiting");
        cmd->add_option("--ic", ics, "initial condition r,psi (repeatable)");
        cmd->add_flag("--ic-lattice", ic_lattice, "use the documented 28-point lattice");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker cap (also ISORES_THREADS)");
    }

    Frame parse_frame() const {
        if (frame == "cartesian") return Frame::Cartesian;
        if (frame == "polar") return Frame::Polar;
        if (frame == "truncated") return Frame::Truncated;
        if (frame == "truncated2") return Frame::Truncated2;
        if (frame == "limiting") return Frame::Limiting;
        throw CliError(2, "unknown frame '" + frame + "'");
    }

    std::vector<PolarIC> initial_conditions(const PolarIC& dflt) const {
        if (ic_lattice) return ic_lattice_points();
        std::vector<PolarIC> out;
        for (const auto& s : ics) {
            const auto comma = s.find(',');
            if (comma == std::string::npos)
                throw CliError(2, "--ic expects r,psi, got '" + s + "'");
            out.push_back({std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))});
        }
        if (out.empty()) out.push_back(dflt);
        return out;
    }

    static std::vector<PolarIC> ic_lattice_points() { return ::isores::ic_lattice(); }

    ordered_json describe() const {
        ordered_json j;
        j["t_start"] = t_start;
        j["t_end"] = t_end;
        j["dt"] = dt;
        j["paths"] = paths;
        j["frame"] = frame;
        j["ic_lattice"] = ic_lattice;
        if (!ics.empty()) j["ic"] = ics;
        return j;
    }
};

// ---------------------------------------------------------------------------
// subcommand implementations

int cmd_validate(const InputOptions& in, bool list) {
    if (list) {
        for (const auto& name : preset_names()) std::cout << name << "\n";
        return 0;
    }
    const SystemSpec spec = in.system();
    spec.validate();
    ordered_json j;
    j["valid"] = true;
    j["system"] = system_summary(spec, std::nullopt);
    ordered_json orders = ordered_json::array();
    for (const auto& [k, pair] : spec.drift) orders.push_back(k);
    j["drift_orders"] = orders;
    ordered_json norders = ordered_json::array();
    for (const auto& [k, m] : spec.noise) norders.push_back(k);
    j["noise_orders"] = norders;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_average(const InputOptions& in, int N, const std::string& out_dir) {
    const SystemSpec spec = in.system();
    const int order = N > 0 ? N : std::min(spec.env.m(), std::max(spec.n, 2));
    const auto avg = average_first(spec, order);
    ordered_json j;
    j["provenance"] = provenance("average", in.describe(), 0);
    j["system"] = system_summary(spec, avg.q);
    j["N"] = order;
    j["averaging"] = averaging_json(avg);
    if (out_dir.empty())
        std::cout << j.dump(2) << "\n";
    else
        atomic_write(fs::path(out_dir) / "averaging.json", j.dump(2) + "\n");
    return 0;
}

int cmd_analyze(const InputOptions& in, int N, const std::string& out_dir) {
    const SystemSpec spec = in.system();
    const int order = N > 0 ? N : std::min(spec.env.m(), std::max(spec.n, 2));
    const auto avg = average_first(spec, order);
    ordered_json j;
    j["provenance"] = provenance("analyze", in.describe(), 0);
    j["system"] = system_summary(spec, avg.q);
    j["N"] = order;
    auto rep = analyze_system(avg);
    j["fixed_points"] = rep["fixed_points"];
    j["drift"] = rep["drift"];
    j["lyapunov"] = rep["lyapunov"];
    if (out_dir.empty())
        std::cout << j.dump(2) << "\n";
    else
        atomic_write(fs::path(out_dir) / "analysis.json", j.dump(2) + "\n");
    return 0;
}

struct GridSpec {
    std::string name;
    double lo = 0.0, hi = 0.0;
    int count = 0;
};

GridSpec parse_grid(const std::string& text) {
    // NAME=lo:hi:count
    const auto eq = text.find('=');
    const auto c1 = text.find(':', eq == std::string::npos ? 0 : eq);
    const auto c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos)
        throw CliError(2, "--grid expects NAME=lo:hi:count, got '" + text + "'");
    GridSpec g;
    g.name = text.substr(0, eq);
    g.lo = std::stod(text.substr(eq + 1, c1 - eq - 1));
    g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    g.count = std::stoi(text.substr(c2 + 1));
    if (g.count < 1) throw CliError(2, "--grid count must be >= 1");
    return g;
}

int cmd_partition(const std::string& preset, double eps, std::vector<std::string> grids,
                  const std::string& out_dir, int threads) {
    if (preset != "ex0" && preset != "ex2")
        throw CliError(2, "partition supports presets ex0 and ex2");
    if (grids.size() != 2) throw CliError(2, "partition needs exactly two --grid options");
    const GridSpec g1 = parse_grid(grids[0]);
    const GridSpec g2 = parse_grid(grids[1]);
    const std::string p1 = g1.name, p2 = g2.name;
    const bool ex0 = preset == "ex0";
    const std::string expected2 = ex0 ? "Q1" : "B1";
    if (p1 != "B0" || (p2 != expected2 && p2 != "B1" && p2 != "Q1"))
        throw CliError(2, "partition grids are B0=... and " + expected2 + "=...");

    auto make = [&](double b0, double second) {
        Overrides ov{{"B0", b0}, {"eps", eps}, {"s1", 0.0}};
        ov["B1"] = second;  // Q1 = B1 - A1 with A1 = 0
        return cartesian_to_polar(ex0 ? make_ex0(ov) : make_ex2(ov));
    };
    PartitionGrid grid{g1.lo, g1.hi, g1.count, g2.lo, g2.hi, g2.count};
    const auto cells = partition_scan(make, grid, 2, resolve_thread_count(threads));

    const auto prov = provenance(
        "partition",
        ordered_json{{"preset", preset}, {"eps", eps}, {"grid1", grids[0]}, {"grid2", grids[1]}},
        0);
    std::string body = csv_provenance_line(prov);
    body += p1 + "," + p2 + ",label,has_stable_plus,has_stable_minus\n";
    for (const auto& c : cells) {
        std::string label = c.has_stable_plus && c.has_stable_minus ? "D+-"
                            : c.has_stable_plus                     ? "D+"
                            : c.has_stable_minus                    ? "D-"
                            : c.has_stable_any                      ? "D"
                                                                    : "D0";
        body += format_double(c.p1) + "," + format_double(c.p2) + "," + label + "," +
                (c.has_stable_plus ? "1" : "0") + "," + (c.has_stable_minus ? "1" : "0") +
                "\n";
    }
    atomic_write(fs::path(out_dir) / "partition.csv", body);
    return 0;
}

int cmd_simulate(const InputOptions& in, const SimOptions& sim) {
    const Frame frame = sim.parse_frame();
    SimConfig cfg;
    cfg.t_start = sim.t_start;
    cfg.t_end = sim.t_end;
    cfg.dt = sim.dt;
    cfg.frame = frame;
    cfg.seed = sim.seed;

    const auto prov = provenance(
        "simulate", ordered_json{{"input", in.describe()}, {"sim", sim.describe()}}, sim.seed);

    const auto cs = in.cartesian();
    const SystemSpec spec = in.system();
    std::optional<AveragedSystem> avg;
    std::optional<SecondAveraged> second;
    if (frame == Frame::Truncated || frame == Frame::Limiting || frame == Frame::Truncated2) {
        avg = average_first(spec, std::min(spec.env.m(), std::max(spec.n, 2)));
        if (frame == Frame::Truncated2) second = average_second(*avg);
    }
    if (frame == Frame::Cartesian && !cs)
        throw CliError(2, "the cartesian frame needs a preset input");

    const auto ics = sim.initial_conditions({1.0, 0.0});
    const fs::path dir = fs::path(sim.out_dir) / "paths";
    int index = 0;
    for (int rep = 0; rep < sim.paths; ++rep) {
        for (const auto& ic : ics) {
            NormalStream stream(path_seed(sim.seed, static_cast<std::uint64_t>(index)));
            PathRecord path;
            switch (frame) {
                case Frame::Cartesian:
                    path = simulate_cartesian(*cs, cfg, ic, stream);
                    break;
                case Frame::Polar:
                    path = simulate_polar(spec, cfg, ic, stream);
                    break;
                case Frame::Truncated:
                    path = simulate_truncated(*avg, cfg, ic);
                    break;
                case Frame::Truncated2:
                    path = simulate_truncated2(*second, cfg, ic);
                    break;
                case Frame::Limiting:
                    path = simulate_limiting(*avg, cfg, ic);
                    break;
            }
            write_path_csv(dir / path_file_name(index), path, frame, prov);
            ++index;
        }
    }
    std::cout << "wrote " << index << " path file(s) under " << dir.string() << "\n";
    return 0;
}

int cmd_ensemble(const InputOptions& in, const SimOptions& sim, const std::string& metric,
                 double eps1, double l_param, const std::string& window_mode,
                 bool sup_csv) {
    const auto cs = in.cartesian();
    if (!cs) throw CliError(2, "ensemble needs a preset input");
    const SystemSpec spec = in.system();
    const int order = std::min(spec.env.m(), std::max(spec.n, 2));
    const auto avg = average_first(spec, order);

    SimConfig cfg;
    cfg.t_start = sim.t_start;
    cfg.t_end = sim.t_end;
    cfg.dt = sim.dt;
    cfg.seed = sim.seed;

    // resolve the exceedance window
    Window wnd{cfg.t_start, cfg.t_end};
    std::string window_note = "full";
    std::function<double(const PathRecord&)> sup_fn;
    PolarIC ic{1.0, 0.0};

    if (metric == "ML") {
        if (!avg.q || *avg.q < avg.n)
            throw CliError(2, "ML metric needs a locked regime (q >= n)");
        const auto roots =
            find_fixed_points(avg.lambda_at(avg.n), avg.omega_at(*avg.q), spec.r_min, spec.R_max);
        std::optional<FixedPointReport> stable;
        for (const auto& [r0, p0] : roots) {
            auto rep = classify_fixed_point(r0, p0, avg);
            if (rep.verdict == Verdict::LockingStable) {
                stable = rep;
                break;
            }
        }
        if (!stable) throw CliError(3, "no locking_stable fixed point found");
        const auto sol = particular_solution(*stable, avg);
        ic = {stable->rho0, stable->phi0};
        if (window_mode == "theorem") {
            const int expn = 2 * avg.p - *avg.q + avg.n;
            const auto hz = horizon_T_eps(spec.env, expn, cfg.t_start, spec.eps, l_param);
            const double T = hz.infinite ? cfg.t_end - cfg.t_start
                                         : std::min(hz.T, cfg.t_end - cfg.t_start);
            wnd = {cfg.t_start, cfg.t_start + T};
            window_note = hz.infinite ? "theorem (infinite, capped at t_end)" : "theorem";
        }
        auto env = spec.env;
        auto rep = *stable;
        sup_fn = [env, sol, rep, wnd](const PathRecord& p) {
            return metric_ML_sup(
                p, env, [&](double t) { return sol.rho_star(t, env); },
                [&](double t) { return sol.phi_star(t, env); }, rep.n, rep.q,
                rep.family_period, wnd);
        };
    } else if (metric == "MD") {
        if (!avg.q || *avg.q >= avg.n)
            throw CliError(2, "MD metric needs the drift regime (q < n)");
        const auto second = average_second(avg);
        const auto reports = classify_drift(second);
        if (reports.empty()) throw CliError(3, "no admissible drift radius found");
        const double rho0 = reports[0].rho0;
        ic = {rho0, 0.0};
        if (window_mode == "theorem") {
            const int expn = std::min(2 * avg.p, avg.n + 1);
            const auto hz = horizon_T_eps(spec.env, expn, cfg.t_start, spec.eps, l_param);
            const double T = hz.infinite ? cfg.t_end - cfg.t_start
                                         : std::min(hz.T, cfg.t_end - cfg.t_start);
            wnd = {cfg.t_start, cfg.t_start + T};
            window_note = hz.infinite ? "theorem (infinite, capped at t_end)" : "theorem";
        }
        sup_fn = [rho0, wnd](const PathRecord& p) {
            return metric_MD_sup(p, [&](double) { return rho0; }, wnd);
        };
    } else {
        throw CliError(2, "unknown metric '" + metric + "' (ML or MD)");
    }

    if (sim.paths < 30)
        std::cerr << "warning: fewer than 30 paths, the normal-approximation confidence "
                     "interval is unreliable\n";
    auto run = [&](int, NormalStream& s) {
        return simulate_cartesian(*cs, cfg, ic, s);
    };
    std::vector<PathSummary> sums;
    const auto stats = ensemble(run, sup_fn, sim.paths, sim.seed, eps1, wnd,
                                resolve_thread_count(sim.threads), &sums);

    const auto prov = provenance(
        "ensemble",
        ordered_json{{"input", in.describe()},
                     {"sim", sim.describe()},
                     {"metric", metric},
                     {"eps1", eps1},
                     {"l", l_param},
                     {"window", window_note}},
        sim.seed);
    ordered_json j;
    j["provenance"] = prov;
    j["metric"] = metric;
    j["eps1"] = eps1;
    j["window"] = {{"t_lo", stats.window.t_lo}, {"t_hi", stats.window.t_hi},
                   {"mode", window_note}};
    j["n_total"] = stats.n_total;
    j["n_exceed"] = stats.n_exceed;
    j["n_absorbed"] = stats.n_absorbed;
    j["n_exited"] = stats.n_exited;
    j["p_hat"] = stats.p_hat;
    j["ci95_halfwidth"] = stats.ci95_halfwidth;
    atomic_write(fs::path(sim.out_dir) / "stats.json", j.dump(2) + "\n");

    if (sup_csv) {
        std::string body = csv_provenance_line(prov);
        body += "path,sup_metric,status,final_rho\n";
        for (std::size_t i = 0; i < sums.size(); ++i)
            body += std::to_string(i) + "," + format_double(sums[i].sup_metric) + "," +
                    path_status_name(sums[i].status) + "," +
                    format_double(sums[i].final_rho) + "\n";
        atomic_write(fs::path(sim.out_dir) / "sups.csv", body);
    }
    std::cout << "p_hat = " << stats.p_hat << " (" << stats.n_exceed << "/" << stats.n_total
              << "), ci95 = " << stats.ci95_halfwidth << "\n";
    return 0;
}

int cmd_reproduce(const std::string& figure, const std::string& out_dir, int n_paths,
                  std::uint64_t seed, int threads) {
    if (!is_preset_name(figure)) throw CliError(2, "unknown figure preset '" + figure + "'");
    const fs::path dir = out_dir.empty() ? fs::path(figure) : fs::path(out_dir);
    InputOptions in;
    in.preset = figure;

    // analysis report
    cmd_analyze(in, 0, dir.string());

    // path bundle from the documented lattice
    SimOptions sim;
    sim.t_start = 50.0;
    sim.t_end = 3000.0;
    sim.seed = seed;
    sim.paths = 1;
    sim.ic_lattice = true;
    sim.out_dir = dir.string();
    sim.frame = "cartesian";
    sim.threads = threads;
    cmd_simulate(in, sim);

    // exceedance statistics for the stochastic figures
    const auto cs = make_preset(figure);
    if (cs.eps > 0.0) {
        const auto avg = average_first(cartesian_to_polar(cs), 2);
        SimOptions esim = sim;
        esim.paths = n_paths;
        const bool drift = avg.q && *avg.q < avg.n;
        cmd_ensemble(in, esim, drift ? "MD" : "ML", 0.5, 0.5, "theorem", true);
    }
    std::cout << "figure bundle written under " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"isores: resonance-averaged analysis and simulation of planar "
                 "isochronous systems with decaying perturbations"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    InputOptions in;
    bool list_presets = false;
    auto* validate = app.add_subcommand("validate", "load and validate a system");
    in.attach(validate);
    validate->add_flag("--list", list_presets, "list preset names");

    InputOptions in_avg;
    int N = 0;
    std::string avg_out;
    auto* average = app.add_subcommand("average", "emit the averaged drift");
    in_avg.attach(average);
    average->add_option("--N", N, "averaging order (default min(m, max(n, 2)))");
    average->add_option("--out", avg_out, "output directory (default: stdout)");

    InputOptions in_ana;
    int N_ana = 0;
    std::string ana_out;
    auto* analyze = app.add_subcommand("analyze", "fixed points, drift radii, Lyapunov data");
    in_ana.attach(analyze);
    analyze->add_option("--N", N_ana, "averaging order");
    analyze->add_option("--out", ana_out, "output directory (default: stdout)");

    std::string part_preset = "ex0", part_out = "out";
    double part_eps = 0.4;
    int part_threads = 0;
    std::vector<std::string> part_grids;
    auto* partition = app.add_subcommand("partition", "parameter-plane scan");
    partition->add_option("--preset,-p", part_preset, "ex0 or ex2");
    partition->add_option("--eps", part_eps, "noise level");
    partition->add_option("--grid", part_grids, "axis spec NAME=lo:hi:count (twice)");
    partition->add_option("--out", part_out, "output directory");
    partition->add_option("--threads", part_threads, "worker cap");

    InputOptions in_sim;
    SimOptions sim;
    auto* simulate = app.add_subcommand("simulate", "integrate sample paths");
    in_sim.attach(simulate);
    sim.attach(simulate);

    InputOptions in_ens;
    SimOptions esim;
    esim.paths = 200;
    std::string metric = "ML", window_mode = "theorem";
    double eps1 = 0.5, l_param = 0.5;
    bool sup_csv = false;
    auto* ens = app.add_subcommand("ensemble", "Monte Carlo exceedance statistics");
    in_ens.attach(ens);
    esim.attach(ens, false);
    ens->add_option("--metric", metric, "ML or MD");
    ens->add_option("--eps1", eps1, "exceedance threshold");
    ens->add_option("--l", l_param, "horizon exponent parameter in (0,1)");
    ens->add_option("--window", window_mode, "theorem | full");
    ens->add_flag("--sup-csv", sup_csv, "also write per-path sups.csv");

    std::string figure, repro_out;
    int repro_paths = 200;
    std::uint64_t repro_seed = 0x1505;
    int repro_threads = 0;
    auto* repro = app.add_subcommand("reproduce", "run a canned figure scenario");
    repro->add_option("figure", figure, "figure preset name")->required();
    repro->add_option("--out", repro_out, "output directory (default: figure name)");
    repro->add_option("--paths", repro_paths, "ensemble size");
    repro->add_option("--seed", repro_seed, "master seed");
    repro->add_option("--threads", repro_threads, "worker cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(in, list_presets);
        if (average->parsed()) return cmd_average(in_avg, N, avg_out);
        if (analyze->parsed()) return cmd_analyze(in_ana, N_ana, ana_out);
        if (partition->parsed())
            return cmd_partition(part_preset, part_eps, part_grids, part_out, part_threads);
        if (simulate->parsed()) return cmd_simulate(in_sim, sim);
        if (ens->parsed())
            return cmd_ensemble(in_ens, esim, metric, eps1, l_param, window_mode, sup_csv);
        if (repro->parsed())
            return cmd_reproduce(figure, repro_out, repro_paths, repro_seed, repro_threads);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
