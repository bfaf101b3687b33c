#include "nds/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace nds {

std::vector<CVector> kernel_basis(const CMatrix& mat, double tol, double floor_scale) {
    if (mat.rows() != mat.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "eigen", "kernel_basis expects a square matrix");
    }
    const Eigen::Index n = mat.cols();
    std::vector<CVector> basis;
    if (n == 0) return basis;
    Eigen::JacobiSVD<CMatrix> svd(mat, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = tol * std::max(sv(0), floor_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sv(i) < cut || sv(0) == 0.0) {
            CVector v = svd.matrixV().col(i);
            normalize_phase(v);
            basis.push_back(std::move(v));
        }
    }
    return basis;
}

int numerical_rank(const CMatrix& mat, double tol) {
    if (mat.size() == 0) return 0;
    Eigen::JacobiSVD<CMatrix> svd(mat);
    const auto& sv = svd.singularValues();
    if (sv(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) >= tol * sv(0)) ++r;
    }
    return r;
}

double cond1_estimate(const CMatrix& mat) {
    const Eigen::Index n = mat.rows();
    if (n == 0) return 1.0;
    const double norm_a = mat.cwiseAbs().colwise().sum().maxCoeff();
    if (norm_a == 0.0) return std::numeric_limits<double>::infinity();
    Eigen::PartialPivLU<CMatrix> lu(mat);
    // Hager / Higham 1-norm estimator of |A^{-1}|_1.
    CVector x = CVector::Constant(n, cplx(1.0 / static_cast<double>(n)));
    double est = 0.0;
    for (int iter = 0; iter < 5; ++iter) {
        CVector y = lu.solve(x);
        if (!all_finite(y)) return std::numeric_limits<double>::infinity();
        const double y1 = y.cwiseAbs().sum();
        if (iter > 0 && y1 <= est) break;
        est = y1;
        CVector xi(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = std::abs(y(i));
            xi(i) = (a == 0.0) ? cplx(1.0) : y(i) / a;
        }
        CVector z = lu.adjoint().solve(xi);
        Eigen::Index j = 0;
        const double zmax = z.cwiseAbs().maxCoeff(&j);
        if (iter > 0 && zmax <= std::real(z.dot(x))) break;
        x = CVector::Zero(n);
        x(j) = 1.0;
    }
    return norm_a * est;
}

void normalize_phase(CVector& v) {
    const double vmax = v.cwiseAbs().maxCoeff();
    if (vmax == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > 1e-6 * vmax) {
            v *= std::conj(v(i)) / a;
            return;
        }
    }
}

CMatrix to_columns(const std::vector<CVector>& basis, Eigen::Index n) {
    CMatrix out(n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = basis[i];
    return out;
}

std::vector<EigenCluster> eigen_structure(const CMatrix& a, double cluster_tol, double rank_tol) {
    const Eigen::Index n = a.rows();
    Eigen::ComplexEigenSolver<CMatrix> es(a, false);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorKind::EigensolveFailure, "classify", "eigensolve did not converge");
    }
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::vector<EigenCluster> out;
    std::vector<bool> used(ev.size(), false);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (used[i]) continue;
        // Single-linkage grouping so a defective block's spread-out copies stay together.
        std::vector<std::size_t> group{i};
        used[i] = true;
        for (std::size_t g = 0; g < group.size(); ++g) {
            for (std::size_t j = 0; j < ev.size(); ++j) {
                if (!used[j] && std::abs(ev[j] - ev[group[g]]) < cluster_tol) {
                    used[j] = true;
                    group.push_back(j);
                }
            }
        }
        cplx mean = 0.0;
        for (auto idx : group) mean += ev[idx];
        mean /= static_cast<double>(group.size());
        if (std::abs(mean.imag()) < 1e-14 * std::max(1.0, std::abs(mean))) mean.imag(0.0);
        if (std::abs(mean.real()) < 1e-14 * std::max(1.0, std::abs(mean))) mean.real(0.0);

        const CMatrix shifted = a - mean * CMatrix::Identity(n, n);
        Eigen::JacobiSVD<CMatrix> svd(shifted);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k) {
            if (sv(k) >= rank_tol) ++rank;
        }
        const int alg = static_cast<int>(group.size());
        const int geo = std::clamp(static_cast<int>(n) - rank, 1, alg);
        out.push_back({mean, alg, geo});
    }
    std::sort(out.begin(), out.end(), [](const EigenCluster& x, const EigenCluster& y) {
        if (x.mu.real() != y.mu.real()) return x.mu.real() < y.mu.real();
        return x.mu.imag() < y.mu.imag();
    });
    return out;
}

}  // namespace nds
