#include "isores/sysdef.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "isores/parser.hpp"
#include "json.hpp"

namespace isores {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_poly_denom(const TrigPoly& p, long varkappa, const std::string& what) {
    if (p.denom_s() != varkappa)
        throw std::invalid_argument("SystemSpec: " + what + " has S-denominator " +
                                    std::to_string(p.denom_s()) + ", expected varkappa = " +
                                    std::to_string(varkappa));
}

}  // namespace

void SystemSpec::validate() const {
    res.validate();
    env.validate();
    if (phase.s.empty()) throw std::invalid_argument("SystemSpec: phase.s is empty");
    if (std::abs(phase.s[0] - res.s0) > 1e-12 * std::max(1.0, std::abs(res.s0)))
        throw std::invalid_argument("SystemSpec: phase s0 disagrees with resonance s0");
    if (n < 1 || p < 1) throw std::invalid_argument("SystemSpec: n and p must be >= 1");
    if (eps < 0.0) throw std::invalid_argument("SystemSpec: eps must be >= 0");
    if (!(R_max > 0.0) || !(r_min > 0.0) || !(r_min < R_max))
        throw std::invalid_argument("SystemSpec: need 0 < r_min < R_max");
    for (const auto& [k, pair] : drift) {
        if (k < n && k != 2 * p)
            throw std::invalid_argument("SystemSpec: drift order " + std::to_string(k) +
                                        " below leading order n = " + std::to_string(n) +
                                        " (only the Ito correction order 2p may do that)");
        check_poly_denom(pair[0], res.varkappa, "drift a1," + std::to_string(k));
        check_poly_denom(pair[1], res.varkappa, "drift a2," + std::to_string(k));
    }
    for (const auto& [k, mat] : noise) {
        if (k < p)
            throw std::invalid_argument("SystemSpec: noise order " + std::to_string(k) +
                                        " below leading order p = " + std::to_string(p));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                check_poly_denom(mat[i][j], res.varkappa,
                                 "noise alpha" + std::to_string(i + 1) + std::to_string(j + 1) +
                                     "," + std::to_string(k));
    }
}

double SystemSpec::drift1(double rho, double phi, double S, double t) const {
    double acc = 0.0;
    for (const auto& [k, pair] : drift)
        acc += env.mu_pow(k, t) * pair[0].eval(rho, phi, S);
    return acc;
}

double SystemSpec::drift2(double rho, double phi, double S, double t) const {
    double acc = 0.0;
    for (const auto& [k, pair] : drift)
        acc += env.mu_pow(k, t) * pair[1].eval(rho, phi, S);
    return acc;
}

std::array<std::array<double, 2>, 2> SystemSpec::noise_at(double rho, double phi, double S,
                                                          double t) const {
    std::array<std::array<double, 2>, 2> out{{{0.0, 0.0}, {0.0, 0.0}}};
    for (const auto& [k, mat] : noise) {
        const double w = env.mu_pow(k, t);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                if (!mat[i][j].empty()) out[i][j] += w * mat[i][j].eval(rho, phi, S);
    }
    return out;
}

void CartesianSpec::validate() const {
    res.validate();
    env.validate();
    if (std::abs(res.nu0 - 1.0) > 1e-12)
        throw std::invalid_argument("CartesianSpec: the oscillator form fixes nu0 = 1");
    if (n < 1 || p < 1) throw std::invalid_argument("CartesianSpec: n and p must be >= 1");
    auto check = [&](const std::vector<XYMonomial>& poly, bool allow_x2, const char* name) {
        for (const auto& m : poly) {
            if (m.dx1 < 0 || m.dx2 < 0)
                throw std::invalid_argument(std::string("CartesianSpec: negative degree in ") +
                                            name);
            if (!allow_x2 && m.dx2 != 0)
                throw std::invalid_argument("CartesianSpec: g must not depend on x2");
            for (const auto& t : m.coeff.terms())
                if (t.jpsi != 0 || t.rpow != 0)
                    throw std::invalid_argument(
                        std::string("CartesianSpec: coefficient of ") + name +
                        " must depend on S only");
            check_poly_denom(m.coeff, res.varkappa, std::string(name) + " coefficient");
        }
    };
    check(f, true, "f");
    check(g, false, "g");
}

double CartesianSpec::eval_f(double x1, double x2, double S) const {
    double acc = 0.0;
    for (const auto& m : f)
        acc += m.coeff.eval(1.0, 0.0, S) * std::pow(x1, m.dx1) * std::pow(x2, m.dx2);
    return acc;
}

double CartesianSpec::eval_g(double x1, double S) const {
    double acc = 0.0;
    for (const auto& m : g) acc += m.coeff.eval(1.0, 0.0, S) * std::pow(x1, m.dx1);
    return acc;
}

SystemSpec cartesian_to_polar(const CartesianSpec& cs) {
    cs.validate();
    const int den = static_cast<int>(cs.res.varkappa);
    const TrigPoly cosphi = TrigPoly::harmonic(1.0, 0, TrigKind::Cos, 1, 0, den);
    const TrigPoly sinphi = TrigPoly::harmonic(1.0, 0, TrigKind::Sin, 1, 0, den);
    const TrigPoly x1 = cosphi.mul_rpow(1);          // r cos(phi)
    const TrigPoly x2 = sinphi.mul_rpow(1).scaled(-1.0);  // -r sin(phi)

    auto substitute = [&](const std::vector<XYMonomial>& poly) {
        TrigPoly acc(den);
        for (const auto& m : poly) acc += m.coeff * x1.pow(m.dx1) * x2.pow(m.dx2);
        return acc;
    };
    const TrigPoly F = substitute(cs.f);
    const TrigPoly G = substitute(cs.g);

    SystemSpec out;
    out.res = cs.res;
    out.env = cs.env;
    out.phase = cs.phase;
    out.n = cs.n;
    out.p = cs.p;
    out.eps = cs.eps;
    out.R_max = cs.R_max;
    out.r_min = cs.r_min;

    auto add_drift = [&](int k, const TrigPoly& a1, const TrigPoly& a2) {
        auto it = out.drift.find(k);
        if (it == out.drift.end())
            out.drift.emplace(k, std::array<TrigPoly, 2>{a1, a2});
        else {
            it->second[0] += a1;
            it->second[1] += a2;
        }
    };
    if (!F.empty()) {
        add_drift(cs.n, (F * sinphi).scaled(-1.0), (F * cosphi).scaled(-1.0).mul_rpow(-1));
    }
    if (!G.empty()) {
        const TrigPoly G2 = G * G;
        const double e2 = cs.eps * cs.eps;
        if (e2 != 0.0) {
            const TrigPoly sin2phi = TrigPoly::harmonic(1.0, 0, TrigKind::Sin, 2, 0, den);
            add_drift(2 * cs.p, (G2 * cosphi * cosphi).scaled(0.5 * e2).mul_rpow(-1),
                      (G2 * sin2phi).scaled(-0.5 * e2).mul_rpow(-2));
        }
        NoiseMatrix mat{{{TrigPoly(den), TrigPoly(den)}, {TrigPoly(den), TrigPoly(den)}}};
        mat[0][0] = (G * sinphi).scaled(-1.0);
        mat[1][0] = (G * cosphi).scaled(-1.0).mul_rpow(-1);
        out.noise.emplace(cs.p, mat);
    }
    out.validate();
    return out;
}

namespace {

Envelope envelope_from_json(const ordered_json& j) {
    Envelope env;
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "power")
        env.family = EnvelopeFamily::Power;
    else if (fam == "power_log")
        env.family = EnvelopeFamily::PowerLog;
    else
        throw std::invalid_argument("spec: unknown envelope family '" + fam + "'");
    env.alpha = j.at("alpha").get<double>();
    env.t0 = j.value("t0", 1.0);
    return env;
}

ordered_json envelope_to_json(const Envelope& env) {
    return {{"family", env.family == EnvelopeFamily::Power ? "power" : "power_log"},
            {"alpha", env.alpha},
            {"t0", env.t0}};
}

}  // namespace

SystemSpec load_system_spec(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("spec: invalid JSON: ") + e.what());
    }
    SystemSpec spec;
    const auto& rj = j.at("resonance");
    spec.res.kappa = rj.at("kappa").get<long>();
    spec.res.varkappa = rj.at("varkappa").get<long>();
    spec.res.nu0 = rj.at("nu0").get<double>();
    spec.res.s0 = rj.at("s0").get<double>();
    spec.env = envelope_from_json(j.at("envelope"));
    const auto& pj = j.at("phase");
    spec.phase.s = pj.at("s").get<std::vector<double>>();
    spec.phase.offset = pj.value("offset", 0.0);
    spec.n = j.at("n").get<int>();
    spec.p = j.at("p").get<int>();
    spec.eps = j.at("eps").get<double>();
    spec.R_max = j.value("R_max", 4.0);
    spec.r_min = j.value("r_min", 0.05);
    const int den = static_cast<int>(spec.res.varkappa);
    if (j.contains("drift")) {
        for (const auto& [key, val] : j.at("drift").items()) {
            const int k = std::stoi(key);
            spec.drift.emplace(k, std::array<TrigPoly, 2>{
                                      parse_expr(val.at(0).get<std::string>(), AngleVar::phi, den),
                                      parse_expr(val.at(1).get<std::string>(), AngleVar::phi, den)});
        }
    }
    if (j.contains("noise")) {
        for (const auto& [key, val] : j.at("noise").items()) {
            const int k = std::stoi(key);
            NoiseMatrix mat{{{TrigPoly(den), TrigPoly(den)}, {TrigPoly(den), TrigPoly(den)}}};
            for (int i = 0; i < 2; ++i)
                for (int c = 0; c < 2; ++c)
                    mat[i][c] = parse_expr(val.at(i).at(c).get<std::string>(), AngleVar::phi, den);
            spec.noise.emplace(k, mat);
        }
    }
    spec.validate();
    return spec;
}

SystemSpec load_system_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("spec: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_system_spec(buf.str());
}

std::string system_spec_to_json(const SystemSpec& spec) {
    ordered_json j;
    j["resonance"] = {{"kappa", spec.res.kappa},
                      {"varkappa", spec.res.varkappa},
                      {"nu0", spec.res.nu0},
                      {"s0", spec.res.s0}};
    j["envelope"] = envelope_to_json(spec.env);
    j["phase"] = {{"s", spec.phase.s}, {"offset", spec.phase.offset}};
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["eps"] = spec.eps;
    j["R_max"] = spec.R_max;
    j["r_min"] = spec.r_min;
    ordered_json dj = ordered_json::object();
    for (const auto& [k, pair] : spec.drift)
        dj[std::to_string(k)] =
            ordered_json::array({pair[0].to_string("phi"), pair[1].to_string("phi")});
    j["drift"] = dj;
    ordered_json nj = ordered_json::object();
    for (const auto& [k, mat] : spec.noise)
        nj[std::to_string(k)] = ordered_json::array(
            {ordered_json::array({mat[0][0].to_string("phi"), mat[0][1].to_string("phi")}),
             ordered_json::array({mat[1][0].to_string("phi"), mat[1][1].to_string("phi")})});
    j["noise"] = nj;
    return j.dump(2);
}

}  // namespace isores
