#include "nds/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace nds {

namespace {

constexpr int kMaxIntegralPower = 16;
// Below this radius I_j is summed from the power series; above it the forward
// recurrence is used. The recurrence amplifies rounding by prod_{i<=j} i/|lambda|,
// which stays below ~1e2 for j <= 17 once |lambda| >= 8.
constexpr double kSeriesRadius = 8.0;

void require_square(const CMatrix& m, Eigen::Index n, const char* what) {
    if (m.rows() != n || m.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "model",
                    std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (!all_finite(m)) {
        throw Error(ErrorKind::InvalidInput, "model", std::string(what) + " has non-finite entries");
    }
}

void check_kernel(const MatrixPolynomial& a, Eigen::Index n, const char* what) {
    if (a.degree() > kMaxKernelDegree) {
        throw Error(ErrorKind::InvalidInput, "model",
                    std::string(what) + " degree exceeds " + std::to_string(kMaxKernelDegree));
    }
    for (const auto& c : a.coefficients()) require_square(c, n, what);
}

// All I_j(lambda) for j = 0..jmax.
std::vector<cplx> exp_poly_integrals(cplx lambda, int jmax) {
    std::vector<cplx> out(static_cast<std::size_t>(jmax) + 1);
    for (int j = 0; j <= jmax; ++j) out[static_cast<std::size_t>(j)] = exp_poly_integral(lambda, j);
    return out;
}

int integral_order_needed(const NeutralSystem& sys) {
    return std::max({sys.a2().degree(), sys.a3().degree(), 0});
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSegment

StateSegment::StateSegment(Eigen::Index n, int grid_m)
    : y(CVector::Zero(n)), z(CMatrix::Zero(n, grid_m + 1)) {
    if (grid_m < kMinGrid) {
        throw Error(ErrorKind::InvalidInput, "model", "grid M must be >= " + std::to_string(kMinGrid));
    }
}

StateSegment::StateSegment(CVector y_part, CMatrix z_samples)
    : y(std::move(y_part)), z(std::move(z_samples)) {
    if (z.rows() != y.size()) {
        throw Error(ErrorKind::DimensionMismatch, "model", "segment samples do not match y dimension");
    }
    if (z.cols() - 1 < kMinGrid) {
        throw Error(ErrorKind::InvalidInput, "model", "grid M must be >= " + std::to_string(kMinGrid));
    }
    if (!all_finite(y) || !all_finite(z)) {
        throw Error(ErrorKind::InvalidInput, "model", "segment has non-finite entries");
    }
}

StateSegment& StateSegment::operator+=(const StateSegment& other) {
    if (other.y.size() != y.size() || other.z.cols() != z.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "model", "segment shapes differ");
    }
    y += other.y;
    z += other.z;
    return *this;
}

StateSegment& StateSegment::operator*=(cplx alpha) {
    y *= alpha;
    z *= alpha;
    return *this;
}

StateSegment operator+(StateSegment a, const StateSegment& b) { return a += b; }
StateSegment operator-(StateSegment a, const StateSegment& b) { return a += cplx(-1.0) * b; }
StateSegment operator*(cplx alpha, StateSegment a) { return a *= alpha; }

// ---------------------------------------------------------------------------
// MatrixPolynomial / NeutralSystem

MatrixPolynomial::MatrixPolynomial(std::vector<CMatrix> coefficients) : coeffs_(std::move(coefficients)) {}

CMatrix MatrixPolynomial::operator()(double theta, Eigen::Index n) const {
    CMatrix acc = CMatrix::Zero(n, n);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * theta + *it;
    return acc;
}

MatrixPolynomial MatrixPolynomial::adjoint() const {
    std::vector<CMatrix> adj;
    adj.reserve(coeffs_.size());
    for (const auto& c : coeffs_) adj.push_back(c.adjoint());
    return MatrixPolynomial(std::move(adj));
}

NeutralSystem::NeutralSystem(CMatrix a_minus1, MatrixPolynomial a2, MatrixPolynomial a3, CMatrix b)
    : a_minus1_(std::move(a_minus1)), a2_(std::move(a2)), a3_(std::move(a3)), b_(std::move(b)) {
    const Eigen::Index n = a_minus1_.rows();
    if (n < 1) throw Error(ErrorKind::InvalidInput, "model", "dimension n must be >= 1");
    require_square(a_minus1_, n, "A_{-1}");
    check_kernel(a2_, n, "A2");
    check_kernel(a3_, n, "A3");
    if (b_.size() == 0) {
        b_ = CMatrix::Zero(n, 0);
    } else if (b_.rows() != n) {
        throw Error(ErrorKind::DimensionMismatch, "model", "B must have " + std::to_string(n) + " rows");
    } else if (!all_finite(b_)) {
        throw Error(ErrorKind::InvalidInput, "model", "B has non-finite entries");
    }
}

NeutralSystem NeutralSystem::adjoint() const {
    return NeutralSystem(a_minus1_.adjoint(), a2_.adjoint(), a3_.adjoint(), CMatrix());
}

NeutralSystem NeutralSystem::with_input(CMatrix b) const {
    return NeutralSystem(a_minus1_, a2_, a3_, std::move(b));
}

// ---------------------------------------------------------------------------
// Characteristic matrices

cplx exp_poly_integral(cplx lambda, int j) {
    if (j < 0 || j > kMaxIntegralPower) {
        throw Error(ErrorKind::InvalidInput, "model", "exp_poly_integral power out of range");
    }
    if (std::abs(lambda) <= kSeriesRadius) {
        // sum_k lambda^k / k! * int_{-1}^0 s^{j+k} ds, int = (-1)^{j+k} / (j+k+1)
        cplx sum = 0.0;
        cplx power = 1.0;  // (-lambda)^k / k!, the (-1)^k folded in
        for (int k = 0; k < 400; ++k) {
            const cplx term = power / static_cast<double>(j + k + 1);
            sum += term;
            if (k >= 20 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
            power *= -lambda / static_cast<double>(k + 1);
        }
        return (j % 2 == 0) ? sum : -sum;
    }
    const cplx e = std::exp(-lambda);
    cplx value = (1.0 - e) / lambda;
    for (int i = 1; i <= j; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        value = (-sign * e - static_cast<double>(i) * value) / lambda;
    }
    return value;
}

CMatrix char_matrix(const NeutralSystem& sys, cplx lambda) {
    const Eigen::Index n = sys.n();
    CMatrix d = -lambda * CMatrix::Identity(n, n) + lambda * std::exp(-lambda) * sys.a_minus1();
    const auto ints = exp_poly_integrals(lambda, integral_order_needed(sys));
    const auto& c2 = sys.a2().coefficients();
    const auto& c3 = sys.a3().coefficients();
    for (std::size_t j = 0; j < c2.size(); ++j) d += (lambda * ints[j]) * c2[j];
    for (std::size_t j = 0; j < c3.size(); ++j) d += ints[j] * c3[j];
    return d;
}

CMatrix char_matrix_adjoint(const NeutralSystem& sys, cplx lambda) {
    return char_matrix(sys.adjoint(), lambda);
}

CMatrix char_matrix_derivative(const NeutralSystem& sys, cplx lambda) {
    const Eigen::Index n = sys.n();
    const cplx e = std::exp(-lambda);
    CMatrix d = -CMatrix::Identity(n, n) + (e - lambda * e) * sys.a_minus1();
    const auto ints = exp_poly_integrals(lambda, integral_order_needed(sys) + 1);
    const auto& c2 = sys.a2().coefficients();
    const auto& c3 = sys.a3().coefficients();
    for (std::size_t j = 0; j < c2.size(); ++j) d += (ints[j] + lambda * ints[j + 1]) * c2[j];
    for (std::size_t j = 0; j < c3.size(); ++j) d += ints[j + 1] * c3[j];
    return d;
}

double char_matrix_scale(const NeutralSystem& sys, cplx lambda) {
    const double n = static_cast<double>(sys.n());
    double s = std::abs(lambda) * std::sqrt(n) + std::abs(lambda * std::exp(-lambda)) * sys.a_minus1().norm();
    const auto ints = exp_poly_integrals(lambda, integral_order_needed(sys));
    const auto& c2 = sys.a2().coefficients();
    const auto& c3 = sys.a3().coefficients();
    for (std::size_t j = 0; j < c2.size(); ++j) s += std::abs(lambda * ints[j]) * c2[j].norm();
    for (std::size_t j = 0; j < c3.size(); ++j) s += std::abs(ints[j]) * c3[j].norm();
    return s;
}

cplx char_det(const NeutralSystem& sys, cplx lambda) {
    const CMatrix d = char_matrix(sys, lambda);
    if (d.rows() == 1) return d(0, 0);
    if (d.rows() == 2) return d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
    return d.partialPivLu().determinant();
}

// ---------------------------------------------------------------------------
// Quadrature

namespace quad {

std::vector<double> trapezoid_weights(int grid_m) {
    const double h = 1.0 / grid_m;
    std::vector<double> w(static_cast<std::size_t>(grid_m) + 1, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

std::vector<CMatrix> sample_kernel(const MatrixPolynomial& a, Eigen::Index n, int grid_m) {
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(grid_m) + 1);
    for (int i = 0; i <= grid_m; ++i) out.push_back(a(-1.0 + static_cast<double>(i) / grid_m, n));
    return out;
}

namespace {

// Cell integral int_{x_c}^{x_{c+1}} f over a cubic through four neighbouring nodes,
// one-sided in the first and last cell. Returns the stencil start and weights (times 1/24).
std::pair<int, std::array<double, 4>> cell_stencil(int c, int grid_m) {
    if (c == 0) return {0, {9.0, 19.0, -5.0, 1.0}};
    if (c == grid_m - 1) return {grid_m - 3, {1.0, -5.0, 19.0, 9.0}};
    return {c - 1, {-1.0, 13.0, 13.0, -1.0}};
}

}  // namespace

std::vector<double> cubic_weights(int grid_m) {
    const double h = 1.0 / grid_m;
    std::vector<double> w(static_cast<std::size_t>(grid_m) + 1, 0.0);
    for (int c = 0; c < grid_m; ++c) {
        const auto [start, st] = cell_stencil(c, grid_m);
        for (int k = 0; k < 4; ++k) w[static_cast<std::size_t>(start + k)] += st[static_cast<std::size_t>(k)] * h / 24.0;
    }
    return w;
}

CMatrix cumulative_exp_integral(const StateSegment& g, cplx lambda) {
    const int m = g.grid_m();
    const double h = g.step();
    CMatrix f(g.dim(), m + 1);
    for (int i = 0; i <= m; ++i) f.col(i) = std::exp(-lambda * g.theta(i)) * g.z.col(i);
    CMatrix j_acc = CMatrix::Zero(g.dim(), m + 1);
    for (int c = m - 1; c >= 0; --c) {
        const auto [start, st] = cell_stencil(c, m);
        CVector cell = CVector::Zero(g.dim());
        for (int k = 0; k < 4; ++k) cell += st[static_cast<std::size_t>(k)] * f.col(start + k);
        j_acc.col(c) = j_acc.col(c + 1) - (h / 24.0) * cell;
    }
    return j_acc;
}

}  // namespace quad

CVector d_vector(const NeutralSystem& sys, const StateSegment& g, cplx lambda) {
    const Eigen::Index n = sys.n();
    if (g.dim() != n) throw Error(ErrorKind::DimensionMismatch, "model", "segment dimension differs from n");
    const int m = g.grid_m();
    const auto w = quad::cubic_weights(m);
    const CMatrix j_acc = quad::cumulative_exp_integral(g, lambda);

    CVector d = g.y;
    // int_{-1}^0 e^{-lambda th} xi(th) dth = -J(-1)
    d -= lambda * std::exp(-lambda) * (sys.a_minus1() * j_acc.col(0));
    for (int i = 0; i <= m; ++i) {
        const double th = g.theta(i);
        const CMatrix a2 = sys.a2()(th, n);
        const CMatrix a3 = sys.a3()(th, n);
        d -= w[static_cast<std::size_t>(i)] * (a2 * g.z.col(i));
        d -= (w[static_cast<std::size_t>(i)] * std::exp(lambda * th)) * ((lambda * a2 + a3) * j_acc.col(i));
    }
    return d;
}

std::pair<MatrixPolynomial, MatrixPolynomial> lift_pointwise_delay(const CMatrix& a0) {
    if (a0.rows() != a0.cols()) throw Error(ErrorKind::DimensionMismatch, "model", "A0 must be square");
    return {MatrixPolynomial({a0, a0}), MatrixPolynomial({a0})};
}

NeutralSystem make_pointwise_system(const CMatrix& a_minus1, const CMatrix& a0, const CMatrix& b) {
    auto [a2, a3] = lift_pointwise_delay(a0);
    return NeutralSystem(a_minus1, std::move(a2), std::move(a3), b);
}

NeutralSystem make_dilemma_system(double b, double s) {
    CMatrix a_minus1 = -CMatrix::Identity(2, 2);
    CMatrix a0(2, 2);
    a0 << -b, s, 0.0, -b;
    return make_pointwise_system(a_minus1, a0);
}

}  // namespace nds
