#pragma once

#include <vector>

#include "nds/types.hpp"

namespace nds {

/// Orthonormal basis of the numerical kernel: right singular vectors with
/// sigma_i < tol * max(sigma_max, floor_scale). A positive floor_scale lets a
/// matrix that is small relative to its natural size count as zero.
std::vector<CVector> kernel_basis(const CMatrix& mat, double tol = 1e-8, double floor_scale = 0.0);

/// Number of singular values >= tol * sigma_max.
int numerical_rank(const CMatrix& mat, double tol = 1e-8);

/// Estimate of the 1-norm condition number (Hager's method on the LU factors).
double cond1_estimate(const CMatrix& mat);

/// Scale v so its first component with |v_i| > 1e-6 * |v|_inf is real positive.
void normalize_phase(CVector& v);

/// Stack a basis as the columns of an n x k matrix.
CMatrix to_columns(const std::vector<CVector>& basis, Eigen::Index n);

struct EigenCluster {
    cplx mu;
    int alg_mult;
    int geo_mult;
};

/// Distinct eigenvalues with multiplicities. Eigenvalues closer than cluster_tol
/// are merged; the geometric multiplicity is n - rank(A - mu I) at rank_tol.
std::vector<EigenCluster> eigen_structure(const CMatrix& a, double cluster_tol, double rank_tol);

}  // namespace nds
