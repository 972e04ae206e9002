#pragma once

// Exact algebra of trigonometric polynomials
//
//   p(r, psi, S) = sum_i  c_i * r^{d_i} * { 1 | cos | sin }( j_i*psi + (l_i/k)*S )
//
// with integer powers d_i (possibly negative), integer angle frequencies j_i,
// and S-frequencies l_i stored as integer numerators over a single global
// denominator k (denom_s), fixed at construction. All frequency bookkeeping is
// exact integer arithmetic; only the coefficients are floating point. The set
// is closed under addition, multiplication (product-to-sum expansion), the
// partial derivatives in r, psi, S, phase substitution, averaging and
// antidifferentiation in S or psi.

#include <cstdint>
#include <string>
#include <vector>

namespace isores {

enum class TrigKind : std::uint8_t { Const, Cos, Sin };

struct TrigTerm {
    double coeff = 0.0;
    int rpow = 0;
    TrigKind kind = TrigKind::Const;
    int jpsi = 0;  // frequency in the slow angle (psi or phi, by context)
    int lnum = 0;  // S-frequency numerator over the global denominator
};

class TrigPoly {
public:
    TrigPoly() = default;
    explicit TrigPoly(int denom_s);

    // Single-term builders. Terms are canonicalized on construction.
    static TrigPoly constant(double c, int denom_s, int rpow = 0);
    static TrigPoly harmonic(double c, int rpow, TrigKind kind, int jpsi, int lnum,
                             int denom_s);
    static TrigPoly from_terms(std::vector<TrigTerm> terms, int denom_s);

    int denom_s() const { return denom_s_; }
    const std::vector<TrigTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    double max_abs_coeff() const;

    TrigPoly operator-() const;
    TrigPoly operator+(const TrigPoly& rhs) const;
    TrigPoly operator-(const TrigPoly& rhs) const;
    TrigPoly operator*(const TrigPoly& rhs) const;
    TrigPoly& operator+=(const TrigPoly& rhs) { return *this = *this + rhs; }
    TrigPoly& operator-=(const TrigPoly& rhs) { return *this = *this - rhs; }
    TrigPoly& operator*=(const TrigPoly& rhs) { return *this = *this * rhs; }

    TrigPoly scaled(double factor) const;
    TrigPoly mul_rpow(int shift) const;  // multiply by r^shift
    TrigPoly pow(int exponent) const;    // exponent >= 0

    enum class Var { r, psi, S };
    TrigPoly diff(Var var) const;

    // Replaces the angle variable phi by (kappa/varkappa)*S + psi.
    // Precondition: denom_s() divides varkappa; the result uses denominator
    // varkappa and keeps all frequencies exact.
    TrigPoly substitute_phase(int kappa, int varkappa) const;

    // Mean over S on [0, 2*pi*denom_s]: keeps exactly the lnum == 0 terms.
    TrigPoly average_S() const;
    // Unique antiderivative in S with zero S-mean. Precondition: zero S-mean.
    TrigPoly antiderivative_S() const;

    // Mean over psi on [0, 2*pi]: keeps the jpsi == 0 terms.
    // Precondition: no residual S-dependence (lnum == 0 throughout).
    TrigPoly average_psi() const;
    // Unique antiderivative in psi with zero psi-mean. Precondition: zero psi-mean.
    TrigPoly antiderivative_psi() const;

    double eval(double r, double psi, double S) const;

    // Term-set comparison after canonicalization: every coefficient difference
    // (an absent term counts as zero) must be <= tol.
    static bool approx_equal(const TrigPoly& a, const TrigPoly& b, double tol);

    std::string to_string(const std::string& angle_var = "psi") const;

    // Canonicalization threshold: terms with |coeff| < kCoeffTol * max|coeff|
    // are dropped.
    static constexpr double kCoeffTol = 1e-13;

private:
    void canonicalize();
    void require_same_denom(const TrigPoly& rhs) const;

    int denom_s_ = 1;
    std::vector<TrigTerm> terms_;  // sorted by (rpow, jpsi, lnum, kind)
};

}  // namespace isores
