#include "isores/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace isores {

namespace {

constexpr double kPi = 3.14159265358979323846;

double take(Overrides& ov, const std::string& key, double dflt) {
    auto it = ov.find(key);
    if (it == ov.end()) return dflt;
    const double v = it->second;
    ov.erase(it);
    return v;
}

void reject_leftovers(const Overrides& ov, const std::string& preset) {
    if (!ov.empty())
        throw std::invalid_argument("preset " + preset + ": unknown parameter '" +
                                    ov.begin()->first + "'");
}

Overrides merge(const Overrides& base, const Overrides& extra) {
    Overrides out = base;
    for (const auto& [k, v] : extra) out[k] = v;
    return out;
}

}  // namespace

CartesianSpec make_ex0(const Overrides& overrides) {
    Overrides ov = overrides;
    const double A1 = take(ov, "A1", 0.0);
    const double B0 = take(ov, "B0", -1.0);
    const double B1 = take(ov, "B1", 2.5);
    const double C0 = take(ov, "C0", -0.2);
    const double eps = take(ov, "eps", 0.4);
    const double s1 = take(ov, "s1", 0.0);
    const int n = static_cast<int>(take(ov, "n", 2));
    const int p = static_cast<int>(take(ov, "p", 1));
    const double t0 = take(ov, "t0", 1.0);
    const double R_max = take(ov, "R_max", 4.0);
    const double r_min = take(ov, "r_min", 0.05);
    reject_leftovers(ov, "ex0");

    CartesianSpec cs;
    cs.res = {1, 2, 1.0, 2.0};
    cs.env = {EnvelopeFamily::Power, 0.25, t0};
    cs.phase.s = {2.0, s1};
    cs.n = n;
    cs.p = p;
    cs.eps = eps;
    cs.R_max = R_max;
    cs.r_min = r_min;

    const int den = 2;  // S-frequency 1 is lnum = 2 over varkappa = 2
    if (A1 != 0.0)
        cs.f.push_back({1, 0, TrigPoly::harmonic(A1, 0, TrigKind::Cos, 0, den, den)});
    if (B0 != 0.0) cs.f.push_back({0, 1, TrigPoly::constant(B0, den)});
    if (B1 != 0.0)
        cs.f.push_back({0, 1, TrigPoly::harmonic(B1, 0, TrigKind::Sin, 0, den, den)});
    if (C0 != 0.0) cs.f.push_back({0, 3, TrigPoly::constant(C0, den)});
    cs.g.push_back({1, 0, TrigPoly::harmonic(1.0, 0, TrigKind::Sin, 0, den, den)});
    cs.validate();
    return cs;
}

CartesianSpec make_ex2(const Overrides& overrides) {
    Overrides ov = overrides;
    const double A1 = take(ov, "A1", 0.0);
    const double B0 = take(ov, "B0", -1.0);
    const double B1 = take(ov, "B1", 2.5);
    const double C0 = take(ov, "C0", -1.0);
    const double eps = take(ov, "eps", 0.5);
    const double s1 = take(ov, "s1", 0.0);
    const int n = static_cast<int>(take(ov, "n", 2));
    const int p = static_cast<int>(take(ov, "p", 1));
    const double t0 = take(ov, "t0", 1.0);
    const double R_max = take(ov, "R_max", 4.0);
    const double r_min = take(ov, "r_min", 0.05);
    reject_leftovers(ov, "ex2");

    CartesianSpec cs;
    cs.res = {1, 1, 1.0, 1.0};
    cs.env = {EnvelopeFamily::Power, 0.5, t0};
    cs.phase.s = {1.0, s1};
    cs.n = n;
    cs.p = p;
    cs.eps = eps;
    cs.R_max = R_max;
    cs.r_min = r_min;

    const int den = 1;
    if (A1 != 0.0)
        cs.f.push_back({1, 0, TrigPoly::harmonic(A1, 0, TrigKind::Sin, 0, 1, den)});
    if (B0 != 0.0) cs.f.push_back({0, 1, TrigPoly::constant(B0, den)});
    if (B1 != 0.0)
        cs.f.push_back({0, 1, TrigPoly::harmonic(B1, 0, TrigKind::Sin, 0, 2, den)});
    if (C0 != 0.0) cs.f.push_back({2, 1, TrigPoly::constant(C0, den)});
    cs.g.push_back({1, 0, TrigPoly::harmonic(1.0, 0, TrigKind::Sin, 0, 1, den)});
    cs.validate();
    return cs;
}

namespace {

struct PresetDef {
    std::string base;  // "ex0" or "ex2"
    Overrides params;
};

const std::map<std::string, PresetDef>& preset_table() {
    static const std::map<std::string, PresetDef> table = {
        {"ex0", {"ex0", {}}},
        {"ex2", {"ex2", {}}},
        {"fig-ex0a", {"ex0", {{"B1", 0.0}, {"eps", 0.0}}}},
        {"fig-ex0b", {"ex0", {{"eps", 0.0}}}},
        {"fig-ex0c", {"ex0", {{"eps", 2.0 / 3.0}}}},
        {"fig-ex1", {"ex0", {}}},
        {"fig-ex11",
         {"ex0", {{"s1", 8.0}, {"B0", 1.0}, {"B1", 1.0}, {"C0", -0.5}, {"eps", 0.5}}}},
        {"fig-ex2", {"ex2", {}}},
        {"fig-ex20", {"ex2", {{"eps", 0.0}}}},
        {"fig-ex22",
         {"ex2", {{"s1", 5.0}, {"B0", 0.5}, {"B1", 1.0}, {"C0", -1.0}, {"eps", 0.5}}}},
    };
    return table;
}

}  // namespace

bool is_preset_name(const std::string& name) { return preset_table().count(name) != 0; }

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : preset_table()) out.push_back(k);
    return out;
}

CartesianSpec make_preset(const std::string& name, const Overrides& ov) {
    auto it = preset_table().find(name);
    if (it == preset_table().end())
        throw std::invalid_argument("unknown preset '" + name + "'");
    const Overrides params = merge(it->second.params, ov);
    return it->second.base == "ex0" ? make_ex0(params) : make_ex2(params);
}

Overrides preset_parameters(const std::string& name, const Overrides& ov) {
    auto it = preset_table().find(name);
    if (it == preset_table().end())
        throw std::invalid_argument("unknown preset '" + name + "'");
    Overrides base{{"A1", 0.0}, {"B0", -1.0}, {"B1", 2.5}, {"eps", 0.0}, {"s1", 0.0},
                   {"n", 2},    {"p", 1}};
    if (it->second.base == "ex0") {
        base["C0"] = -0.2;
        base["eps"] = 0.4;
    } else {
        base["C0"] = -1.0;
        base["eps"] = 0.5;
    }
    return merge(merge(base, it->second.params), ov);
}

std::vector<PolarIC> ic_lattice() {
    std::vector<PolarIC> out;
    for (int i = 1; i <= 7; ++i)
        for (int j = 0; j < 4; ++j)
            out.push_back({0.3 * i, j * kPi / 2.0});
    return out;
}

}  // namespace isores
