#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;

namespace detail {

template <class T>
T simpson_rec(const std::function<T(double)>& f, double a, double b, T fa, T fm, T fb, T whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const T flm = f(lm), frm = f(rm);
    const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const T delta = left + right - whole;
    using std::abs;
    if (depth <= 0 || abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson on [a, b]; works for double and complex integrands.
template <class T>
T simpson(const std::function<T(double)>& f, double a, double b, double tol = 1e-12) {
    // Split into panels first so oscillatory integrands are resolved.
    const int panels = 16;
    T total{};
    for (int p = 0; p < panels; ++p) {
        const double lo = a + (b - a) * p / panels, hi = a + (b - a) * (p + 1) / panels;
        const double m = 0.5 * (lo + hi);
        const T fa = f(lo), fm = f(m), fb = f(hi);
        const T whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_rec(f, lo, hi, fa, fm, fb, whole, tol / panels, 40);
    }
    return total;
}

/// Matrix-valued integral entry by entry.
inline CMat simpson_matrix(const std::function<CMat(double)>& f, int rows, int cols, double a, double b,
                           double tol = 1e-12) {
    CMat out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            out(i, j) = simpson<cplx>([&](double t) { return f(t)(i, j); }, a, b, tol);
        }
    }
    return out;
}

/// Rank by Gaussian elimination with complete pivoting, pivots below tol * max|entry| count as zero.
inline int gauss_rank(CMat m, double tol = 1e-8) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0;
    int rank = 0;
    const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
    for (int step = 0; step < std::min(rows, cols); ++step) {
        int pr = -1, pc = -1;
        double best = 0.0;
        for (int i = step; i < rows; ++i) {
            for (int j = step; j < cols; ++j) {
                if (std::abs(m(i, j)) > best) {
                    best = std::abs(m(i, j));
                    pr = i;
                    pc = j;
                }
            }
        }
        if (best <= tol * scale) break;
        m.row(step).swap(m.row(pr));
        m.col(step).swap(m.col(pc));
        for (int i = step + 1; i < rows; ++i) {
            const cplx f = m(i, step) / m(step, step);
            m.row(i) -= f * m.row(step);
        }
        ++rank;
    }
    return rank;
}

/// Newton iteration with an analytic derivative.
inline cplx newton(const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& df, cplx z, int iters = 60) {
    for (int i = 0; i < iters; ++i) {
        const cplx step = f(z) / df(z);
        z -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

/// Roots of lambda e^lambda + lambda + b e^lambda with 0 <= Im <= im_max, from
/// Newton started on a dense grid and deduplicated.
inline std::vector<cplx> dilemma_roots(double b, double im_max) {
    auto f = [b](cplx l) { return l * std::exp(l) + l + b * std::exp(l); };
    auto df = [b](cplx l) { return std::exp(l) + l * std::exp(l) + 1.0 + b * std::exp(l); };
    std::vector<cplx> out;
    for (double im = 0.0; im <= im_max + 2.0; im += 0.25) {
        for (double re = -3.0; re <= 1.0; re += 0.5) {
            const cplx z = newton(f, df, cplx(re, im));
            if (!std::isfinite(z.real()) || std::abs(f(z)) > 1e-8 * std::max(1.0, std::abs(z))) continue;
            if (z.imag() < -1e-9 || z.imag() > im_max || z.real() < -3.0 || z.real() > 1.0) continue;
            bool dup = false;
            for (const auto& w : out) dup = dup || std::abs(w - z) < 1e-6;
            if (!dup) out.push_back(z);
        }
    }
    return out;
}

/// Zeros of a real function on [lo, hi] by a fine sign scan and bisection.
inline std::vector<double> scan_zeros(const std::function<double(double)>& f, double lo, double hi, double step = 1e-3) {
    std::vector<double> out;
    double a = lo, fa = f(a);
    while (a < hi) {
        const double b = std::min(hi, a + step);
        const double fb = f(b);
        if (fa == 0.0) {
            out.push_back(a);
        } else if (fa * fb < 0.0) {
            double x0 = a, x1 = b, f0 = fa;
            for (int i = 0; i < 200 && x1 - x0 > 1e-14; ++i) {
                const double m = 0.5 * (x0 + x1);
                const double fm = f(m);
                if (f0 * fm <= 0.0) {
                    x1 = m;
                } else {
                    x0 = m;
                    f0 = fm;
                }
            }
            out.push_back(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    return out;
}

/// Eigenvalues of a 2x2 matrix from the characteristic quadratic.
inline std::pair<cplx, cplx> eig2(const CMat& m) {
    const cplx tr = m(0, 0) + m(1, 1);
    const cplx det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

inline CMat random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, 1.0);
    CMat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * cplx(nd(rng), nd(rng));
    }
    return m;
}

}  // namespace oracle
