#pragma once

#include <utility>
#include <vector>

#include "nds/types.hpp"

namespace nds {

inline constexpr int kMaxKernelDegree = 8;

/// A(theta) = sum_j C_j theta^j on [-1, 0]. An empty coefficient list is the zero kernel.
class MatrixPolynomial {
public:
    MatrixPolynomial() = default;
    explicit MatrixPolynomial(std::vector<CMatrix> coefficients);

    const std::vector<CMatrix>& coefficients() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    CMatrix operator()(double theta, Eigen::Index n) const;
    MatrixPolynomial adjoint() const;

private:
    std::vector<CMatrix> coeffs_;
};

/// d/dt [z(t) - A_{-1} z(t-1)] = int A2(th) z'(t+th) dth + int A3(th) z(t+th) dth + B u(t)
class NeutralSystem {
public:
    NeutralSystem(CMatrix a_minus1, MatrixPolynomial a2, MatrixPolynomial a3,
                  CMatrix b = CMatrix());

    Eigen::Index n() const { return a_minus1_.rows(); }
    Eigen::Index p() const { return b_.cols(); }

    const CMatrix& a_minus1() const { return a_minus1_; }
    const MatrixPolynomial& a2() const { return a2_; }
    const MatrixPolynomial& a3() const { return a3_; }
    const CMatrix& b() const { return b_; }

    /// System with every coefficient conjugate-transposed (generates Delta*).
    NeutralSystem adjoint() const;
    NeutralSystem with_input(CMatrix b) const;

private:
    CMatrix a_minus1_;
    MatrixPolynomial a2_;
    MatrixPolynomial a3_;
    CMatrix b_;
};

/// I_j(lambda) = int_{-1}^0 e^{lambda s} s^j ds.
cplx exp_poly_integral(cplx lambda, int j);

/// Delta(lambda) = -lambda I + lambda e^{-lambda} A_{-1} + lambda int e^{lambda s} A2(s) ds
///                 + int e^{lambda s} A3(s) ds.
CMatrix char_matrix(const NeutralSystem& sys, cplx lambda);

/// Delta*(lambda), built from the conjugate-transposed coefficients.
CMatrix char_matrix_adjoint(const NeutralSystem& sys, cplx lambda);

CMatrix char_matrix_derivative(const NeutralSystem& sys, cplx lambda);

/// Sum of the magnitudes of the terms of Delta(lambda); the natural size against
/// which a "numerically zero" Delta is judged.
double char_matrix_scale(const NeutralSystem& sys, cplx lambda);

cplx char_det(const NeutralSystem& sys, cplx lambda);

/// D(z, xi, lambda) with fourth-order grid quadrature for both the inner and outer integrals.
CVector d_vector(const NeutralSystem& sys, const StateSegment& g, cplx lambda);

/// Pointwise term A0 z(t) written as A2(th) = (th+1) A0, A3(th) = A0.
std::pair<MatrixPolynomial, MatrixPolynomial> lift_pointwise_delay(const CMatrix& a0);

/// Convenience: z' = A_{-1} z'(t-1) + A0 z(t) + B u.
NeutralSystem make_pointwise_system(const CMatrix& a_minus1, const CMatrix& a0,
                                    const CMatrix& b = CMatrix());

/// The two-dimensional dilemma family: A_{-1} = -I, A0 = [[-b, s], [0, -b]].
NeutralSystem make_dilemma_system(double b, double s);

// Quadrature helpers shared with the eigen and sim modules.
namespace quad {

/// Trapezoid weights on the uniform grid of M intervals over [-1, 0].
std::vector<double> trapezoid_weights(int grid_m);

/// Fourth-order composite weights from piecewise-cubic interpolation (exact for cubics).
std::vector<double> cubic_weights(int grid_m);

/// Samples of the kernel A(theta_i) on the grid, i = 0..M.
std::vector<CMatrix> sample_kernel(const MatrixPolynomial& a, Eigen::Index n, int grid_m);

/// J(theta_i) = int_0^{theta_i} e^{-lambda s} xi(s) ds, cumulative piecewise-cubic rule.
CMatrix cumulative_exp_integral(const StateSegment& g, cplx lambda);

}  // namespace quad

}  // namespace nds
