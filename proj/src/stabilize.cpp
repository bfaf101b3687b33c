#include "nds/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nds/classify.hpp"
#include "nds/eigen.hpp"

namespace nds {

namespace {

constexpr double kRankTol = 1e-8;
constexpr double kScalarMargin = 1e-6;
constexpr double kPlacementTol = 1e-6;
constexpr int kMaxFinitePart = 20;

CMatrix normalized_input(const CMatrix& b) {
    const double nb = b.norm();
    return nb > 0.0 ? CMatrix(b / nb) : b;
}

int block_rank(const CMatrix& left, const CMatrix& b) {
    CMatrix block(left.rows(), left.cols() + b.cols());
    block << left, normalized_input(b);
    return numerical_rank(block, kRankTol);
}

int rank_condition4(const CMatrix& a_minus1, const CMatrix& b, cplx mu) {
    const Eigen::Index n = a_minus1.rows();
    const CMatrix left = (mu * CMatrix::Identity(n, n) - a_minus1) / (std::abs(mu) + a_minus1.norm());
    return block_rank(left, b);
}

void require_input(const NeutralSystem& sys, const CMatrix& b) {
    if (b.cols() == 0) throw Error(ErrorKind::InvalidInput, "stabilize", "input matrix B is empty (p = 0)");
    if (b.rows() != sys.n()) throw Error(ErrorKind::DimensionMismatch, "stabilize", "B must have n rows");
}

bool on_unit_circle(cplx mu) { return std::abs(std::abs(mu) - 1.0) < kUnitCircleTol; }

// Vectors b must not be orthogonal to, with the threshold for each.
struct Constraint {
    CVector y;
    double threshold;
};

std::vector<Constraint> scalarization_constraints(const NeutralSystem& sys, const std::vector<RootRecord>& roots) {
    std::vector<Constraint> out;
    const CMatrix& am1 = sys.a_minus1();
    const Eigen::Index n = sys.n();
    const double scale = std::max(1.0, am1.norm());
    for (const auto& c : sigma1_of(delay_matrix_structure(am1))) {
        const CMatrix m = (am1 - c.mu * CMatrix::Identity(n, n)).adjoint();
        for (const auto& y : kernel_basis(m, 1e-6, scale)) out.push_back({y, kScalarMargin});
    }
    for (const auto& r : roots) {
        if (r.lambda.real() < -1e-9) continue;
        const int k = r.lattice ? r.lattice->k : 0;
        const auto kp = root_kernels(sys, r.lambda);
        for (Eigen::Index j = 0; j < kp.y.cols(); ++j) {
            out.push_back({kp.y.col(j), kScalarMargin / (std::abs(k) + 1.0)});
        }
    }
    return out;
}

double worst_ratio(const CVector& b, const std::vector<Constraint>& cons) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& c : cons) worst = std::min(worst, std::abs(c.y.dot(b)) / c.threshold);
    return worst;
}

}  // namespace

std::vector<RankCheck3> check_condition3(const NeutralSystem& sys, const std::vector<RootRecord>& roots, double m_cut,
                                         double re_floor) {
    require_input(sys, sys.b());
    std::vector<RankCheck3> out;
    const Eigen::Index n = sys.n();
    for (const auto& r : roots) {
        if (r.lambda.real() < re_floor) continue;
        RankCheck3 chk;
        chk.root = r;
        if (r.lattice && std::abs(r.lambda.imag()) > m_cut) {
            chk.via_condition4 = true;
            chk.rank = rank_condition4(sys.a_minus1(), sys.b(), r.lattice->mu);
        } else {
            const CMatrix d = char_matrix(sys, r.lambda) / char_matrix_scale(sys, r.lambda);
            chk.rank = block_rank(d, sys.b());
        }
        chk.pass = chk.rank == n;
        out.push_back(chk);
    }
    return out;
}

std::vector<RankCheck3> check_condition3(const NeutralSystem& sys, const SpectralWindow& window, double m_cut) {
    require_input(sys, sys.b());
    return check_condition3(sys, locate_window_roots(sys, window), m_cut);
}

std::vector<RankCheck4> check_condition4(const CMatrix& a_minus1, const CMatrix& b) {
    if (b.cols() == 0) throw Error(ErrorKind::InvalidInput, "stabilize", "input matrix B is empty (p = 0)");
    if (b.rows() != a_minus1.rows()) throw Error(ErrorKind::DimensionMismatch, "stabilize", "B must have n rows");
    std::vector<RankCheck4> out;
    for (const auto& c : sigma1_of(delay_matrix_structure(a_minus1))) {
        RankCheck4 chk;
        chk.mu = c.mu;
        chk.rank = rank_condition4(a_minus1, b, c.mu);
        chk.pass = chk.rank == a_minus1.rows();
        out.push_back(chk);
    }
    return out;
}

Scalarization scalarize_input(const NeutralSystem& sys, const CMatrix& b, const std::vector<RootRecord>& roots,
                              std::uint64_t seed) {
    require_input(sys, b);
    const auto cons = scalarization_constraints(sys, roots);
    const Eigen::Index p = b.cols();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double best = 0.0;
    const int budget = p == 1 ? 1 : kScalarizationDraws;
    for (int draw = 1; draw <= budget; ++draw) {
        CVector c = CVector::Zero(p);
        if (draw == 1) {
            c(0) = 1.0;
        } else {
            for (Eigen::Index j = 0; j < p; ++j) c(j) = cplx(normal(rng), normal(rng)) / std::sqrt(2.0);
        }
        const CVector bc = b * c;
        const double ratio = worst_ratio(bc, cons);
        best = std::max(best, ratio);
        if (ratio > 1.0) return Scalarization{c, bc, draw, ratio};
    }
    std::ostringstream os;
    os << "no admissible b = Bc after " << budget << " draws (best margin ratio " << best << ")";
    throw Error(ErrorKind::ScalarizationFailed, "stabilize", os.str());
}

PairingAsymptotics pairing_asymptotics_check(const NeutralSystem& sys, const CVector& b, int k_min, int k_max) {
    if (b.size() != sys.n()) throw Error(ErrorKind::DimensionMismatch, "stabilize", "b must have n entries");
    if (k_min > k_max) throw Error(ErrorKind::InvalidInput, "stabilize", "empty k range");
    PairingAsymptotics out;
    std::vector<LatticeRoot> roots;
    for (auto& lr : lattice_roots(sys, k_min, k_max)) {
        if (on_unit_circle(lr.seed.mu)) roots.push_back(std::move(lr));
    }
    out.samples.resize(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const auto& lr = roots[i];
        const auto kp = root_kernels(sys, lr.root.lambda);
        const double mag = std::abs(lr.root.lambda);
        const double v = mag > 0.0 ? std::abs(lr.seed.k) * (kp.y.adjoint() * b).norm() / mag : 0.0;
        out.samples[i] = PairingSample{lr.seed.m, lr.seed.k, lr.root.lambda, v};
    }
    std::sort(out.samples.begin(), out.samples.end(),
              [](const PairingSample& a, const PairingSample& c) { return a.m != c.m ? a.m < c.m : a.k < c.k; });

    if (out.samples.empty()) return out;
    const int k_quart = k_min + (3 * (k_max - k_min)) / 4;
    out.evidence = true;
    int m_prev = 0;
    for (const auto& s : out.samples) {
        if (s.m == m_prev) continue;
        m_prev = s.m;
        std::vector<double> tail;
        for (const auto& t : out.samples) {
            if (t.m == s.m && t.k >= k_quart) tail.push_back(t.value);
        }
        if (tail.empty()) {
            out.evidence = false;
            continue;
        }
        std::vector<double> sorted = tail;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
        const double med = sorted[sorted.size() / 2];
        if (!(med > 1e-300)) {
            out.evidence = false;
            continue;
        }
        for (double v : tail) {
            if (std::abs(v - med) >= 0.25 * med) out.evidence = false;
        }
    }
    return out;
}

AssignmentTargets assignment_targets(const std::vector<TargetInput>& roots, double margin) {
    if (!(margin > 0.0 && margin < 1.0)) throw Error(ErrorKind::InvalidInput, "stabilize", "margin must lie in (0, 1)");
    AssignmentTargets out;
    for (const auto& r : roots) {
        const cplx target = r.lambda - margin * r.radius;
        if (target.real() < 0.0 && r.radius > 0.0) {
            out.accepted.push_back(Target{r.m, r.k, r.lambda, target});
        } else {
            std::ostringstream os;
            if (r.radius <= 0.0) {
                os << "root circle has zero radius";
            } else {
                os << "shifted target has Re " << target.real() << " >= 0";
            }
            out.rejected.push_back(RejectedTarget{r.m, r.k, r.lambda, os.str()});
        }
    }
    return out;
}

std::vector<TargetInput> target_inputs(const std::vector<LatticeRoot>& roots) {
    std::vector<TargetInput> out;
    out.reserve(roots.size());
    for (const auto& lr : roots) out.push_back(TargetInput{lr.seed.m, lr.seed.k, lr.root.lambda, lr.radius});
    return out;
}

CVector place_modal(const CVector& eigs, const CVector& beta, const CVector& targets) {
    const Eigen::Index r = eigs.size();
    if (beta.size() != r || targets.size() != r) {
        throw Error(ErrorKind::DimensionMismatch, "stabilize", "eigs, beta and targets must have equal length");
    }
    CVector k(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (std::abs(beta(i)) < 1e-12) throw Error(ErrorKind::PlacementFailed, "stabilize", "mode is not reached by the input");
        cplx num = 1.0;
        cplx den = beta(i);
        for (Eigen::Index j = 0; j < r; ++j) {
            num *= eigs(i) - targets(j);
            if (j != i) {
                if (std::abs(eigs(i) - eigs(j)) < 1e-9 * std::max(1.0, std::abs(eigs(i)))) {
                    throw Error(ErrorKind::PlacementFailed, "stabilize", "repeated open-loop roots");
                }
                den *= eigs(i) - eigs(j);
            }
        }
        k(i) = num / den;
    }
    return k;
}

Placement finite_pole_placement(const NeutralSystem& sys, const std::vector<RootRecord>& lambda2, const CMatrix& b,
                                const CVector& targets, std::uint64_t seed) {
    require_input(sys, b);
    Placement out;
    const Eigen::Index r = static_cast<Eigen::Index>(lambda2.size());
    if (r == 0) {
        out.gain = CMatrix::Zero(b.cols(), 0);
        return out;
    }
    if (r > kMaxFinitePart) throw Error(ErrorKind::InvalidInput, "stabilize", "at most 20 finite roots can be placed");
    if (targets.size() != r) throw Error(ErrorKind::DimensionMismatch, "stabilize", "one target per finite root");
    for (Eigen::Index i = 0; i < r; ++i) {
        if (!(targets(i).real() < 0.0)) throw Error(ErrorKind::InvalidInput, "stabilize", "targets must have Re < 0");
    }
    for (const auto& root : lambda2) {
        if (root.alg_mult != 1) throw Error(ErrorKind::PlacementFailed, "stabilize", "repeated root in the finite part");
    }
    const CVector c = scalarize_input(sys, b, lambda2, seed).c;
    const CVector bc = b * c;

    CVector eigs(r);
    out.beta = CVector(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const cplx l = lambda2[static_cast<std::size_t>(i)].lambda;
        const auto kp = root_kernels(sys, l);
        const CVector x = kp.x.col(0);
        const CVector y = kp.y.col(0);
        const cplx d = pairing_formula(sys, l, x, y);
        if (std::abs(d) < 1e-12) throw Error(ErrorKind::PlacementFailed, "stabilize", "degenerate modal pairing");
        eigs(i) = l;
        out.beta(i) = y.dot(bc) / d;
    }
    out.modal_gain = place_modal(eigs, out.beta, targets);
    out.gain = c * out.modal_gain.transpose();

    const CMatrix closed = CMatrix(eigs.asDiagonal()) - out.beta * out.modal_gain.transpose();
    Eigen::ComplexEigenSolver<CMatrix> es(closed, false);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::EigensolveFailure, "stabilize", "closed-loop eigensolve failed");
    CVector ev = es.eigenvalues();
    std::vector<bool> used(static_cast<std::size_t>(r), false);
    out.closed_loop = CVector(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        Eigen::Index best = -1;
        for (Eigen::Index j = 0; j < r; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            if (best < 0 || std::abs(ev(j) - targets(i)) < std::abs(ev(best) - targets(i))) best = j;
        }
        used[static_cast<std::size_t>(best)] = true;
        out.closed_loop(i) = ev(best);
        out.max_deviation = std::max(out.max_deviation, std::abs(ev(best) - targets(i)));
    }
    if (out.max_deviation > kPlacementTol) {
        std::ostringstream os;
        os << "closed-loop spectrum misses the targets by " << out.max_deviation;
        throw Error(ErrorKind::PlacementFailed, "stabilize", os.str());
    }
    return out;
}

StabilizabilityReport stabilizability_report(const NeutralSystem& sys, const SpectralWindow& window,
                                             const StabilizeOptions& opts) {
    require_input(sys, sys.b());
    window.validate();
    StabilizabilityReport rep;
    const auto structure = delay_matrix_structure(sys.a_minus1());
    const auto sigma1 = sigma1_of(structure);
    rep.cond1 = std::all_of(structure.begin(), structure.end(),
                            [](const EigenCluster& c) { return std::abs(c.mu) <= 1.0 + kUnitCircleTol; });
    rep.cond2 = std::all_of(sigma1.begin(), sigma1.end(), [](const EigenCluster& c) { return c.alg_mult == 1; });

    const auto roots = locate_window_roots(sys, window);
    rep.cond3 = check_condition3(sys, roots, opts.m_cut);
    rep.cond4 = check_condition4(sys.a_minus1(), sys.b());
    const bool c3 = std::all_of(rep.cond3.begin(), rep.cond3.end(), [](const RankCheck3& c) { return c.pass; });
    const bool c4 = std::all_of(rep.cond4.begin(), rep.cond4.end(), [](const RankCheck4& c) { return c.pass; });
    rep.pass = rep.cond1 && rep.cond2 && c3 && c4;
    if (!rep.cond1) rep.notes.push_back("condition 1 fails: A_{-1} has an eigenvalue outside the unit circle");
    if (!rep.cond2) rep.notes.push_back("condition 2 fails: an eigenvalue of A_{-1} on the unit circle is not simple");

    if (c3 && c4) {
        try {
            rep.scalarization = scalarize_input(sys, sys.b(), roots, opts.seed);
        } catch (const Error& e) {
            rep.notes.push_back(e.what());
        }
    }

    if (!sigma1.empty()) {
        std::vector<LatticeRoot> chain;
        for (auto& lr : lattice_roots(sys, 0, window.effective_k_max())) {
            if (on_unit_circle(lr.seed.mu)) chain.push_back(std::move(lr));
        }
        rep.targets = assignment_targets(target_inputs(chain), opts.margin);
    }

    for (const auto& r : roots) {
        if (r.lambda.real() < -1e-9) continue;
        if (r.lattice && on_unit_circle(r.lattice->mu)) continue;
        rep.lambda2.push_back(r);
    }
    if (!rep.lambda2.empty() && rep.scalarization) {
        CVector targets(static_cast<Eigen::Index>(rep.lambda2.size()));
        for (std::size_t i = 0; i < rep.lambda2.size(); ++i) {
            const cplx l = rep.lambda2[i].lambda;
            targets(static_cast<Eigen::Index>(i)) = cplx(-1.0 - l.real(), l.imag());
        }
        try {
            rep.finite_gain = finite_pole_placement(sys, rep.lambda2, sys.b(), targets, opts.seed);
        } catch (const Error& e) {
            rep.notes.push_back(e.what());
        }
    }
    rep.notes.push_back("feedback kernels for the infinite part are not synthesized; targets only");
    return rep;
}

void write_report(std::ostream& os, const StabilizabilityReport& rep) {
    os.precision(10);
    os << "condition1 " << (rep.cond1 ? "pass" : "fail") << '\n';
    os << "condition2 " << (rep.cond2 ? "pass" : "fail") << '\n';
    for (const auto& c : rep.cond3) {
        os << "condition3 lambda=" << c.root.lambda << " rank=" << c.rank << (c.via_condition4 ? " via=condition4" : "")
           << ' ' << (c.pass ? "pass" : "fail") << '\n';
    }
    if (rep.cond3.empty()) os << "condition3 no roots with Re >= 0 in window (vacuous pass)\n";
    for (const auto& c : rep.cond4) {
        os << "condition4 mu=" << c.mu << " rank=" << c.rank << ' ' << (c.pass ? "pass" : "fail") << '\n';
    }
    if (rep.cond4.empty()) os << "condition4 sigma1 empty (vacuous pass)\n";
    if (rep.scalarization) {
        os << "scalarization draws=" << rep.scalarization->draws << " margin=" << rep.scalarization->worst_margin << " c=";
        for (Eigen::Index j = 0; j < rep.scalarization->c.size(); ++j) os << (j ? ";" : "") << rep.scalarization->c(j);
        os << '\n';
    }
    os << "targets accepted=" << rep.targets.accepted.size() << " rejected=" << rep.targets.rejected.size() << '\n';
    for (const auto& t : rep.targets.accepted) {
        os << "target m=" << t.m << " k=" << t.k << " lambda=" << t.lambda << " hat=" << t.target << '\n';
    }
    for (const auto& t : rep.targets.rejected) {
        os << "rejected m=" << t.m << " k=" << t.k << " lambda=" << t.lambda << " reason=" << t.reason << '\n';
    }
    os << "finite_part " << rep.lambda2.size() << " roots";
    if (rep.finite_gain) os << ", placed (max deviation " << rep.finite_gain->max_deviation << ")";
    os << '\n';
    for (const auto& n : rep.notes) os << "note " << n << '\n';
    os << "verdict " << (rep.pass ? "Stabilizable" : "NotStabilizable") << '\n';
}

void write_gain_csv(std::ostream& os, const CMatrix& gain) {
    os << "row,col,re,im\n";
    os.precision(15);
    for (Eigen::Index i = 0; i < gain.rows(); ++i) {
        for (Eigen::Index j = 0; j < gain.cols(); ++j) {
            os << i << ',' << j << ',' << gain(i, j).real() << ',' << gain(i, j).imag() << '\n';
        }
    }
}

}  // namespace nds
