#include "isores/trigpoly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace isores {

namespace {

// Integer power with negative exponents allowed.
double ipow(double base, int e) {
    if (e < 0) return 1.0 / ipow(base, -e);
    double acc = 1.0, b = base;
    for (unsigned k = static_cast<unsigned>(e); k != 0; k >>= 1) {
        if (k & 1u) acc *= b;
        b *= b;
    }
    return acc;
}

std::tuple<int, int, int, int> term_key(const TrigTerm& t) {
    return {t.rpow, t.jpsi, t.lnum, static_cast<int>(t.kind)};
}

std::string format_coeff(double c) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", c);
    return buf;
}

}  // namespace

TrigPoly::TrigPoly(int denom_s) : denom_s_(denom_s) {
    if (denom_s < 1) throw std::invalid_argument("TrigPoly: denom_s must be >= 1");
}

TrigPoly TrigPoly::constant(double c, int denom_s, int rpow) {
    TrigPoly p(denom_s);
    p.terms_.push_back({c, rpow, TrigKind::Const, 0, 0});
    p.canonicalize();
    return p;
}

TrigPoly TrigPoly::harmonic(double c, int rpow, TrigKind kind, int jpsi, int lnum,
                            int denom_s) {
    TrigPoly p(denom_s);
    p.terms_.push_back({c, rpow, kind, jpsi, lnum});
    p.canonicalize();
    return p;
}

TrigPoly TrigPoly::from_terms(std::vector<TrigTerm> terms, int denom_s) {
    TrigPoly p(denom_s);
    p.terms_ = std::move(terms);
    p.canonicalize();
    return p;
}

double TrigPoly::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.coeff));
    return m;
}

void TrigPoly::canonicalize() {
    for (auto& t : terms_) {
        if (t.kind == TrigKind::Const) {
            if (t.jpsi != 0 || t.lnum != 0)
                throw std::invalid_argument("TrigPoly: const term with nonzero frequency");
            continue;
        }
        if (t.jpsi == 0 && t.lnum == 0) {
            // cos(0) = 1, sin(0) = 0
            if (t.kind == TrigKind::Sin) t.coeff = 0.0;
            t.kind = TrigKind::Const;
            continue;
        }
        // canonical sign: leading nonzero frequency component positive
        if (t.jpsi < 0 || (t.jpsi == 0 && t.lnum < 0)) {
            t.jpsi = -t.jpsi;
            t.lnum = -t.lnum;
            if (t.kind == TrigKind::Sin) t.coeff = -t.coeff;
        }
    }
    std::sort(terms_.begin(), terms_.end(), [](const TrigTerm& a, const TrigTerm& b) {
        return term_key(a) < term_key(b);
    });
    std::vector<TrigTerm> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (!merged.empty() && term_key(merged.back()) == term_key(t))
            merged.back().coeff += t.coeff;
        else
            merged.push_back(t);
    }
    double cutoff = 0.0;
    for (const auto& t : merged) cutoff = std::max(cutoff, std::abs(t.coeff));
    cutoff *= kCoeffTol;
    terms_.clear();
    for (const auto& t : merged)
        if (std::abs(t.coeff) > cutoff && t.coeff != 0.0) terms_.push_back(t);
}

void TrigPoly::require_same_denom(const TrigPoly& rhs) const {
    if (denom_s_ != rhs.denom_s_)
        throw std::invalid_argument("TrigPoly: S-denominator mismatch (" +
                                    std::to_string(denom_s_) + " vs " +
                                    std::to_string(rhs.denom_s_) + ")");
}

TrigPoly TrigPoly::operator-() const { return scaled(-1.0); }

TrigPoly TrigPoly::operator+(const TrigPoly& rhs) const {
    require_same_denom(rhs);
    TrigPoly out(denom_s_);
    out.terms_ = terms_;
    out.terms_.insert(out.terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::operator-(const TrigPoly& rhs) const { return *this + (-rhs); }

TrigPoly TrigPoly::operator*(const TrigPoly& rhs) const {
    require_same_denom(rhs);
    TrigPoly out(denom_s_);
    out.terms_.reserve(2 * terms_.size() * rhs.terms_.size());
    for (const auto& a : terms_) {
        for (const auto& b : rhs.terms_) {
            const double c = a.coeff * b.coeff;
            const int d = a.rpow + b.rpow;
            if (a.kind == TrigKind::Const && b.kind == TrigKind::Const) {
                out.terms_.push_back({c, d, TrigKind::Const, 0, 0});
            } else if (a.kind == TrigKind::Const) {
                out.terms_.push_back({c, d, b.kind, b.jpsi, b.lnum});
            } else if (b.kind == TrigKind::Const) {
                out.terms_.push_back({c, d, a.kind, a.jpsi, a.lnum});
            } else {
                const int js = a.jpsi + b.jpsi, ls = a.lnum + b.lnum;  // A + B
                const int jd = a.jpsi - b.jpsi, ld = a.lnum - b.lnum;  // A - B
                if (a.kind == TrigKind::Cos && b.kind == TrigKind::Cos) {
                    // cosA cosB = (cos(A-B) + cos(A+B)) / 2
                    out.terms_.push_back({0.5 * c, d, TrigKind::Cos, jd, ld});
                    out.terms_.push_back({0.5 * c, d, TrigKind::Cos, js, ls});
                } else if (a.kind == TrigKind::Sin && b.kind == TrigKind::Sin) {
                    // sinA sinB = (cos(A-B) - cos(A+B)) / 2
                    out.terms_.push_back({0.5 * c, d, TrigKind::Cos, jd, ld});
                    out.terms_.push_back({-0.5 * c, d, TrigKind::Cos, js, ls});
                } else if (a.kind == TrigKind::Sin) {
                    // sinA cosB = (sin(A+B) + sin(A-B)) / 2
                    out.terms_.push_back({0.5 * c, d, TrigKind::Sin, js, ls});
                    out.terms_.push_back({0.5 * c, d, TrigKind::Sin, jd, ld});
                } else {
                    // cosA sinB = (sin(A+B) - sin(A-B)) / 2
                    out.terms_.push_back({0.5 * c, d, TrigKind::Sin, js, ls});
                    out.terms_.push_back({-0.5 * c, d, TrigKind::Sin, jd, ld});
                }
            }
        }
    }
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::scaled(double factor) const {
    TrigPoly out(denom_s_);
    out.terms_ = terms_;
    for (auto& t : out.terms_) t.coeff *= factor;
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::mul_rpow(int shift) const {
    TrigPoly out(denom_s_);
    out.terms_ = terms_;
    for (auto& t : out.terms_) t.rpow += shift;
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::pow(int exponent) const {
    if (exponent < 0) throw std::invalid_argument("TrigPoly::pow: negative exponent");
    TrigPoly acc = constant(1.0, denom_s_);
    for (int i = 0; i < exponent; ++i) acc = acc * (*this);
    return acc;
}

TrigPoly TrigPoly::diff(Var var) const {
    TrigPoly out(denom_s_);
    out.terms_.reserve(terms_.size());
    for (const auto& t : terms_) {
        switch (var) {
            case Var::r:
                if (t.rpow != 0)
                    out.terms_.push_back(
                        {t.coeff * t.rpow, t.rpow - 1, t.kind, t.jpsi, t.lnum});
                break;
            case Var::psi:
                if (t.kind == TrigKind::Cos && t.jpsi != 0)
                    out.terms_.push_back(
                        {-t.coeff * t.jpsi, t.rpow, TrigKind::Sin, t.jpsi, t.lnum});
                else if (t.kind == TrigKind::Sin && t.jpsi != 0)
                    out.terms_.push_back(
                        {t.coeff * t.jpsi, t.rpow, TrigKind::Cos, t.jpsi, t.lnum});
                break;
            case Var::S: {
                const double freq = static_cast<double>(t.lnum) / denom_s_;
                if (t.kind == TrigKind::Cos && t.lnum != 0)
                    out.terms_.push_back(
                        {-t.coeff * freq, t.rpow, TrigKind::Sin, t.jpsi, t.lnum});
                else if (t.kind == TrigKind::Sin && t.lnum != 0)
                    out.terms_.push_back(
                        {t.coeff * freq, t.rpow, TrigKind::Cos, t.jpsi, t.lnum});
                break;
            }
        }
    }
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::substitute_phase(int kappa, int varkappa) const {
    if (varkappa < 1) throw std::invalid_argument("substitute_phase: varkappa must be >= 1");
    if (varkappa % denom_s_ != 0)
        throw std::invalid_argument(
            "substitute_phase: poly denominator must divide varkappa");
    const int scale = varkappa / denom_s_;
    TrigPoly out(varkappa);
    out.terms_ = terms_;
    for (auto& t : out.terms_) {
        if (t.kind == TrigKind::Const) continue;
        t.lnum = t.jpsi * kappa + t.lnum * scale;
    }
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::average_S() const {
    TrigPoly out(denom_s_);
    for (const auto& t : terms_)
        if (t.lnum == 0) out.terms_.push_back(t);
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::antiderivative_S() const {
    TrigPoly out(denom_s_);
    for (const auto& t : terms_) {
        if (t.lnum == 0)
            throw std::invalid_argument(
                "antiderivative_S: input has nonzero S-mean (lnum == 0 term present)");
        const double inv_freq = static_cast<double>(denom_s_) / t.lnum;
        if (t.kind == TrigKind::Cos)
            out.terms_.push_back({t.coeff * inv_freq, t.rpow, TrigKind::Sin, t.jpsi, t.lnum});
        else
            out.terms_.push_back({-t.coeff * inv_freq, t.rpow, TrigKind::Cos, t.jpsi, t.lnum});
    }
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::average_psi() const {
    TrigPoly out(denom_s_);
    for (const auto& t : terms_) {
        if (t.lnum != 0)
            throw std::invalid_argument("average_psi: residual S-dependence");
        if (t.jpsi == 0) out.terms_.push_back(t);
    }
    out.canonicalize();
    return out;
}

TrigPoly TrigPoly::antiderivative_psi() const {
    TrigPoly out(denom_s_);
    for (const auto& t : terms_) {
        if (t.jpsi == 0)
            throw std::invalid_argument(
                "antiderivative_psi: input has nonzero psi-mean (jpsi == 0 term present)");
        const double inv_freq = 1.0 / t.jpsi;
        if (t.kind == TrigKind::Cos)
            out.terms_.push_back({t.coeff * inv_freq, t.rpow, TrigKind::Sin, t.jpsi, t.lnum});
        else
            out.terms_.push_back({-t.coeff * inv_freq, t.rpow, TrigKind::Cos, t.jpsi, t.lnum});
    }
    out.canonicalize();
    return out;
}

double TrigPoly::eval(double r, double psi, double S) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        if (t.rpow < 0 && r == 0.0)
            throw std::domain_error("TrigPoly::eval: r = 0 with negative power");
        double v = t.coeff * ipow(r, t.rpow);
        if (t.kind != TrigKind::Const) {
            const double angle = t.jpsi * psi + (static_cast<double>(t.lnum) / denom_s_) * S;
            v *= (t.kind == TrigKind::Cos) ? std::cos(angle) : std::sin(angle);
        }
        acc += v;
    }
    return acc;
}

bool TrigPoly::approx_equal(const TrigPoly& a, const TrigPoly& b, double tol) {
    if (a.denom_s_ != b.denom_s_) return false;
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
        if (i < a.terms_.size() && j < b.terms_.size() &&
            term_key(a.terms_[i]) == term_key(b.terms_[j])) {
            if (std::abs(a.terms_[i].coeff - b.terms_[j].coeff) > tol) return false;
            ++i, ++j;
        } else if (j >= b.terms_.size() ||
                   (i < a.terms_.size() && term_key(a.terms_[i]) < term_key(b.terms_[j]))) {
            if (std::abs(a.terms_[i].coeff) > tol) return false;
            ++i;
        } else {
            if (std::abs(b.terms_[j].coeff) > tol) return false;
            ++j;
        }
    }
    return true;
}

std::string TrigPoly::to_string(const std::string& angle_var) const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& t : terms_) {
        double c = t.coeff;
        if (first) {
            if (c < 0) {
                out += "-";
                c = -c;
            }
        } else {
            out += (c < 0) ? " - " : " + ";
            c = std::abs(c);
        }
        first = false;
        out += format_coeff(c);
        if (t.rpow != 0) {
            out += "*r";
            if (t.rpow != 1) out += "^" + std::to_string(t.rpow);
        }
        if (t.kind != TrigKind::Const) {
            out += (t.kind == TrigKind::Cos) ? "*cos(" : "*sin(";
            std::string angle;
            if (t.jpsi != 0) {
                if (t.jpsi == 1)
                    angle += angle_var;
                else if (t.jpsi == -1)
                    angle += "-" + angle_var;
                else
                    angle += std::to_string(t.jpsi) + "*" + angle_var;
            }
            if (t.lnum != 0) {
                const int g = std::gcd(std::abs(t.lnum), denom_s_);
                const int num = t.lnum / g, den = denom_s_ / g;
                std::string sterm;
                if (den == 1) {
                    if (num == 1)
                        sterm = "S";
                    else if (num == -1)
                        sterm = "-S";
                    else
                        sterm = std::to_string(num) + "*S";
                } else {
                    sterm = std::to_string(num) + "/" + std::to_string(den) + "*S";
                }
                if (!angle.empty()) {
                    if (sterm[0] == '-')
                        angle += " - " + sterm.substr(1);
                    else
                        angle += " + " + sterm;
                } else {
                    angle = sterm;
                }
            }
            out += angle + ")";
        }
    }
    return out;
}

}  // namespace isores
