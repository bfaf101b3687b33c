#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "nds/spectrum.hpp"

namespace nds {

struct EigenPair {
    cplx lambda;
    CVector x;          // Ker Delta(lambda), unit norm
    CVector y;          // Ker Delta*(conj lambda), unit norm
    StateSegment phi;   // eigenvector of the state operator
    StateSegment psi;   // eigenvector of the adjoint at conj lambda
    cplx pairing;       // -<Delta'(lambda) x, y>
    std::optional<LatticeTag> lattice;

    /// psi / conj(lambda), the normalisation under which the adjoint family stays bounded.
    StateSegment psi_hat() const;
};

/// phi = ((I - e^{-lambda} A_{-1}) x, e^{lambda theta} x).
StateSegment eigenvector(const NeutralSystem& sys, cplx lambda, const CVector& x, int grid_m = kDefaultGrid);

/// psi = (y, [conj(l) e^{-conj(l) th} - A2*(th) + e^{-conj(l) th} int_0^th e^{conj(l) s}(A3*(s) + conj(l) A2*(s)) ds] y),
/// evaluated at lambda_bar = conj(l). The inner integral is exact for polynomial kernels.
StateSegment adjoint_eigenvector(const NeutralSystem& sys, cplx lambda_bar, const CVector& y,
                                 int grid_m = kDefaultGrid);

/// <g1, g2> = <y1, y2> + int <z1, z2>, trapezoid; conjugate-linear in g2.
cplx m2_inner_product(const StateSegment& g1, const StateSegment& g2);

double m2_norm(const StateSegment& g);

/// -<Delta'(lambda0) x, y> = -y^H Delta'(lambda0) x.
cplx pairing_formula(const NeutralSystem& sys, cplx lambda0, const CVector& x, const CVector& y);

/// R(lambda) g by the closed form: solve Delta(lambda) w = D(z, xi, lambda).
StateSegment resolvent_apply(const NeutralSystem& sys, cplx lambda, const StateSegment& g);

struct KernelPair {
    CMatrix x;  // n x g, columns span Ker Delta(lambda)
    CMatrix y;  // n x g, columns span Ker Delta*(conj lambda)
};

/// Kernel bases at a root, rotated so that Y^H Delta'(lambda) X is diagonal.
KernelPair root_kernels(const NeutralSystem& sys, cplx lambda);

/// One eigenpair per kernel direction at the root.
std::vector<EigenPair> eigenpairs_at(const NeutralSystem& sys, const RootRecord& root, int grid_m = kDefaultGrid);

struct PairingBounds {
    double min_val = 0.0;
    double max_val = 0.0;
    std::vector<double> values;
};

/// Extremes of |(1/lambda) <Delta'(lambda) x, y>| over the roots. Semisimple
/// multiple roots contribute the singular values of (1/lambda) Y^H Delta' X.
PairingBounds pairing_bound_scan(const NeutralSystem& sys, const std::vector<RootRecord>& roots);

/// True when D(z, xi, lambda0) has no component along Ker Delta*(conj lambda0):
/// |Y^H D| < tol * max(|D|, |g| (1 + |lambda0|) (1 + sum of coefficient norms)).
bool image_membership_check(const NeutralSystem& sys, const StateSegment& g, const RootRecord& root,
                            double tol = 1e-6);

void write_eigenpairs_csv(std::ostream& os, const std::vector<EigenPair>& pairs);

}  // namespace nds
