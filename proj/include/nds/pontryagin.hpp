#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nds/types.hpp"

namespace nds {

struct QpTerm {
    int m;   // power of z
    int n;   // exponent multiple, e^{n z}
    cplx a;
};

/// H(z) = sum a_mn z^m e^{n z}.
class QuasiPolynomial {
public:
    explicit QuasiPolynomial(std::vector<QpTerm> terms);

    const std::vector<QpTerm>& terms() const { return terms_; }
    cplx operator()(cplx z) const;
    bool real_coefficients() const;

    /// "m,n,a; m,n,a" or "m,n,re,im; ..." (whitespace ignored).
    static QuasiPolynomial parse(const std::string& text);

private:
    std::vector<QpTerm> terms_;
};

/// y^p (cos_coef cos(q y) + sin_coef sin(q y)); q = 0 is the constant y^p cos_coef.
struct TrigTerm {
    int p;
    int q;
    double cos_coef;
    double sin_coef;
};

class TrigPolynomial {
public:
    TrigPolynomial() = default;
    explicit TrigPolynomial(std::vector<TrigTerm> terms);

    const std::vector<TrigTerm>& terms() const { return terms_; }
    double operator()(double y) const;
    double derivative(double y) const;
    /// Entire extension to complex arguments.
    cplx operator()(cplx y) const;
    /// Sum of term magnitudes at y; reference size for "numerically zero".
    double magnitude(double y) const;
    int max_frequency() const;

private:
    std::vector<TrigTerm> terms_;
};

/// The term dominating every other in both exponents, if any.
std::optional<std::pair<int, int>> principal_term(const QuasiPolynomial& qp);

/// H(iy) = F(y) + i G(y). Requires real coefficients.
std::pair<TrigPolynomial, TrigPolynomial> split_fg(const QuasiPolynomial& qp);

struct ZeroSet {
    std::vector<double> zeros;     // sorted, including flagged multiple zeros
    std::vector<double> multiple;  // zeros where f and f' vanish together
    bool flagged() const { return !multiple.empty(); }
};

/// Sign-change scan plus bisection to 1e-12; touching zeros are flagged as multiple.
ZeroSet real_zeros(const TrigPolynomial& tp, double lo, double hi);

struct CountResult {
    int count = 0;
    int expected = 0;
    bool pass = false;
    bool inconclusive = false;  // a multiple zero was flagged
};

/// Zero count on [-2 pi k + eps, 2 pi k + eps] against 4 k s + r.
CountResult count_check(const TrigPolynomial& tp, int r, int s, int k, double eps);

/// Zeros of f and g in [lo, hi] are simple, strictly interleaved and at least 1e-9 apart.
bool alternation_check(const TrigPolynomial& f, const TrigPolynomial& g, double lo, double hi);

enum class LhpVerdict { Certified, Refuted, Inconclusive };

const char* to_string(LhpVerdict v);

struct LhpCertificate {
    LhpVerdict verdict = LhpVerdict::Inconclusive;
    std::string reason;   // NoPrincipalTerm, ComplexCoefficients, CountMismatch, SignViolation, ...
    std::string witness;
    int k_window = 0;
    double epsilon = 0.0;
    std::vector<double> zeros;        // F zeros in the final window
    std::vector<double> sign_values;  // -G(y0) F'(y0) at those zeros
};

/// Finite-window evidence for all zeros of H lying in Re z < 0.
LhpCertificate lhp_certificate(const QuasiPolynomial& qp);

}  // namespace nds
