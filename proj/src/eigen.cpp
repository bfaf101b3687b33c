#include "nds/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "nds/linalg.hpp"
#include "nds/parallel.hpp"

namespace nds {

namespace {

constexpr double kKernelTol = 1e-8;
constexpr double kMismatchTol = 1e-6;

void require_unit(const CVector& v, Eigen::Index n, const char* what) {
    if (v.size() != n) throw Error(ErrorKind::DimensionMismatch, "eigen", std::string(what) + " has wrong length");
    if (std::abs(v.norm() - 1.0) > 1e-8) {
        throw Error(ErrorKind::InvalidInput, "eigen", std::string(what) + " must have unit norm");
    }
}

}  // namespace

StateSegment EigenPair::psi_hat() const { return (1.0 / std::conj(lambda)) * psi; }

StateSegment eigenvector(const NeutralSystem& sys, cplx lambda, const CVector& x, int grid_m) {
    const Eigen::Index n = sys.n();
    require_unit(x, n, "x");
    const double tol = kMismatchTol * std::max(1.0, char_matrix_scale(sys, lambda));
    if ((char_matrix(sys, lambda) * x).norm() >= tol) {
        throw Error(ErrorKind::KernelMismatch, "eigen", "x is not in Ker Delta(lambda)");
    }
    StateSegment phi(n, grid_m);
    phi.y = x - std::exp(-lambda) * (sys.a_minus1() * x);
    for (int i = 0; i <= grid_m; ++i) phi.z.col(i) = std::exp(lambda * phi.theta(i)) * x;
    return phi;
}

StateSegment adjoint_eigenvector(const NeutralSystem& sys, cplx lambda_bar, const CVector& y, int grid_m) {
    const Eigen::Index n = sys.n();
    require_unit(y, n, "y");
    const double tol = kMismatchTol * std::max(1.0, char_matrix_scale(sys, std::conj(lambda_bar)));
    if ((char_matrix_adjoint(sys, lambda_bar) * y).norm() >= tol) {
        throw Error(ErrorKind::KernelMismatch, "eigen", "y is not in Ker Delta*(conj lambda)");
    }
    const NeutralSystem adj = sys.adjoint();
    const auto& c2 = adj.a2().coefficients();
    const auto& c3 = adj.a3().coefficients();
    const std::size_t terms = std::max(c2.size(), c3.size());
    // K_j y with K_j = C3_j* + conj(l) C2_j*
    std::vector<CVector> ky(terms, CVector::Zero(n));
    for (std::size_t j = 0; j < c2.size(); ++j) ky[j] += lambda_bar * (c2[j] * y);
    for (std::size_t j = 0; j < c3.size(); ++j) ky[j] += c3[j] * y;

    StateSegment psi(n, grid_m);
    psi.y = y;
    for (int i = 0; i <= grid_m; ++i) {
        const double th = psi.theta(i);
        const double a = -th;  // |theta|
        const cplx e = std::exp(-lambda_bar * th);
        CVector col = lambda_bar * e * y - adj.a2()(th, n) * y;
        if (a > 0.0) {
            // int_0^th e^{c s} s^j ds = -|th|^{j+1} I_j(c |th|)
            double apow = a;
            for (std::size_t j = 0; j < terms; ++j) {
                col -= (e * apow * exp_poly_integral(lambda_bar * a, static_cast<int>(j))) * ky[j];
                apow *= a;
            }
        }
        psi.z.col(i) = col;
    }
    return psi;
}

cplx m2_inner_product(const StateSegment& g1, const StateSegment& g2) {
    if (g1.dim() != g2.dim() || g1.grid_m() != g2.grid_m()) {
        throw Error(ErrorKind::DimensionMismatch, "eigen", "segments differ in dimension or grid");
    }
    const auto w = quad::trapezoid_weights(g1.grid_m());
    cplx acc = g2.y.dot(g1.y);
    for (int i = 0; i <= g1.grid_m(); ++i) acc += w[static_cast<std::size_t>(i)] * g2.z.col(i).dot(g1.z.col(i));
    return acc;
}

double m2_norm(const StateSegment& g) { return std::sqrt(std::max(0.0, m2_inner_product(g, g).real())); }

cplx pairing_formula(const NeutralSystem& sys, cplx lambda0, const CVector& x, const CVector& y) {
    return -y.dot(char_matrix_derivative(sys, lambda0) * x);
}

StateSegment resolvent_apply(const NeutralSystem& sys, cplx lambda, const StateSegment& g) {
    const Eigen::Index n = sys.n();
    if (g.dim() != n) throw Error(ErrorKind::DimensionMismatch, "eigen", "segment dimension differs from n");
    const CMatrix delta = char_matrix(sys, lambda);
    // A root where Delta vanishes entirely has a perfect condition number, so
    // the size relative to its terms is checked as well.
    const double size = delta.cwiseAbs().colwise().sum().maxCoeff();
    if (cond1_estimate(delta) > 1e12 || size < 1e-12 * char_matrix_scale(sys, lambda)) {
        throw Error(ErrorKind::NearSingular, "eigen", "Delta(lambda) is near singular");
    }
    const CVector w = delta.partialPivLu().solve(d_vector(sys, g, lambda));
    const CMatrix j_acc = quad::cumulative_exp_integral(g, lambda);
    const CMatrix ea = std::exp(-lambda) * sys.a_minus1();
    StateSegment out(n, g.grid_m());
    out.y = -(ea * j_acc.col(0)) + w - ea * w;
    for (int i = 0; i <= g.grid_m(); ++i) out.z.col(i) = std::exp(lambda * g.theta(i)) * (j_acc.col(i) + w);
    return out;
}

KernelPair root_kernels(const NeutralSystem& sys, cplx lambda) {
    const Eigen::Index n = sys.n();
    const double scale = char_matrix_scale(sys, lambda);
    const auto xs = kernel_basis(char_matrix(sys, lambda), kKernelTol, scale);
    const auto ys = kernel_basis(char_matrix_adjoint(sys, std::conj(lambda)), kKernelTol, scale);
    if (xs.empty() || xs.size() != ys.size()) {
        throw Error(ErrorKind::KernelMismatch, "eigen", "kernel dimensions of Delta and Delta* disagree");
    }
    KernelPair kp{to_columns(xs, n), to_columns(ys, n)};
    if (xs.size() > 1) {
        const CMatrix p = kp.y.adjoint() * char_matrix_derivative(sys, lambda) * kp.x;
        Eigen::JacobiSVD<CMatrix> svd(p, Eigen::ComputeFullU | Eigen::ComputeFullV);
        kp.x = kp.x * svd.matrixV();
        kp.y = kp.y * svd.matrixU();
    }
    for (Eigen::Index c = 0; c < kp.x.cols(); ++c) {
        CVector vx = kp.x.col(c);
        CVector vy = kp.y.col(c);
        normalize_phase(vx);
        normalize_phase(vy);
        kp.x.col(c) = vx;
        kp.y.col(c) = vy;
    }
    return kp;
}

std::vector<EigenPair> eigenpairs_at(const NeutralSystem& sys, const RootRecord& root, int grid_m) {
    const cplx l = root.lambda;
    const KernelPair kp = root_kernels(sys, l);
    std::vector<EigenPair> out;
    for (Eigen::Index c = 0; c < kp.x.cols(); ++c) {
        const CVector x = kp.x.col(c);
        const CVector y = kp.y.col(c);
        out.push_back(EigenPair{l, x, y, eigenvector(sys, l, x, grid_m), adjoint_eigenvector(sys, std::conj(l), y, grid_m),
                                pairing_formula(sys, l, x, y), root.lattice});
    }
    return out;
}

PairingBounds pairing_bound_scan(const NeutralSystem& sys, const std::vector<RootRecord>& roots) {
    if (roots.empty()) throw Error(ErrorKind::EmptyInput, "eigen", "no roots to scan");
    std::vector<std::vector<double>> per(roots.size());
    parallel_for(roots.size(), [&](std::size_t i) {
        const auto& r = roots[i];
        if (r.geo_mult < r.alg_mult) {
            throw Error(ErrorKind::InvalidInput, "eigen", "pairing bound needs semisimple roots");
        }
        const KernelPair kp = root_kernels(sys, r.lambda);
        const CMatrix p = (1.0 / r.lambda) * (kp.y.adjoint() * char_matrix_derivative(sys, r.lambda) * kp.x);
        Eigen::JacobiSVD<CMatrix> svd(p);
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) per[i].push_back(svd.singularValues()(k));
    });
    PairingBounds b;
    for (const auto& v : per) b.values.insert(b.values.end(), v.begin(), v.end());
    b.min_val = *std::min_element(b.values.begin(), b.values.end());
    b.max_val = *std::max_element(b.values.begin(), b.values.end());
    return b;
}

bool image_membership_check(const NeutralSystem& sys, const StateSegment& g, const RootRecord& root, double tol) {
    const CVector d = d_vector(sys, g, root.lambda);
    // Reference size: D itself, or the bound on its terms when they cancel.
    double coeffs = 1.0 + sys.a_minus1().norm();
    for (const auto* poly : {&sys.a2(), &sys.a3()}) {
        for (const auto& c : poly->coefficients()) coeffs += c.norm();
    }
    const double dn = std::max(d.norm(), m2_norm(g) * (1.0 + std::abs(root.lambda)) * coeffs);
    if (dn == 0.0) return true;
    const double scale = char_matrix_scale(sys, root.lambda);
    const auto ys = kernel_basis(char_matrix_adjoint(sys, std::conj(root.lambda)), kKernelTol, scale);
    const CMatrix y = to_columns(ys, sys.n());
    return (y.adjoint() * d).norm() < tol * dn;
}

void write_eigenpairs_csv(std::ostream& os, const std::vector<EigenPair>& pairs) {
    const Eigen::Index n = pairs.empty() ? 0 : pairs.front().x.size();
    os << "m,k,re,im";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i << "_re,x" << i << "_im";
    for (Eigen::Index i = 0; i < n; ++i) os << ",y" << i << "_re,y" << i << "_im";
    os << ",pairing_re,pairing_im\n";
    os.precision(12);
    for (const auto& p : pairs) {
        if (p.lattice) {
            os << p.lattice->m << ',' << p.lattice->k;
        } else {
            os << ',';
        }
        os << ',' << p.lambda.real() << ',' << p.lambda.imag();
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << p.x(i).real() << ',' << p.x(i).imag();
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << p.y(i).real() << ',' << p.y(i).imag();
        os << ',' << p.pairing.real() << ',' << p.pairing.imag() << '\n';
    }
}

}  // namespace nds
