#include "nds/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nds {

namespace {
constexpr double kAxisTol = 1e-9;
constexpr double kMaxDim = 32;
}  // namespace

const char* to_string(NecessaryCondition c) {
    switch (c) {
        case NecessaryCondition::Holds: return "Holds";
        case NecessaryCondition::Violated: return "Violated";
        case NecessaryCondition::Unknown: return "Unknown";
    }
    return "Unknown";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::StronglyStable: return "StronglyStable";
        case Verdict::Unstable: return "Unstable";
        case Verdict::DilemmaCaseIII: return "DilemmaCaseIII";
        case Verdict::ExponentiallyStableEvidence: return "ExponentiallyStableEvidence";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

std::string ClassificationReport::verdict_line() const {
    std::string line = to_string(verdict);
    if (!note.empty()) line += " (" + note + ")";
    return line;
}

std::vector<EigenCluster> delay_matrix_structure(const CMatrix& a_minus1) {
    if (a_minus1.rows() != a_minus1.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "classify", "A_{-1} must be square");
    }
    if (a_minus1.rows() > kMaxDim) throw Error(ErrorKind::InvalidInput, "classify", "n must be <= 32");
    const double scale = std::max(1.0, a_minus1.norm());
    return eigen_structure(a_minus1, 1e-6 * scale, 1e-8 * scale);
}

std::vector<EigenCluster> sigma1_of(const std::vector<EigenCluster>& structure, double tol) {
    std::vector<EigenCluster> out;
    for (const auto& c : structure) {
        if (std::abs(std::abs(c.mu) - 1.0) < tol) out.push_back(c);
    }
    return out;
}

ClassificationReport classify_system(const NeutralSystem& sys, const SpectralWindow& window) {
    window.validate();
    ClassificationReport rep;
    rep.window = window;
    rep.structure = delay_matrix_structure(sys.a_minus1());
    rep.sigma1 = sigma1_of(rep.structure);
    rep.spectral_abscissa_window = -std::numeric_limits<double>::infinity();

    for (const auto& c : rep.structure) {
        if (std::abs(c.mu) > 1.0 + kUnitCircleTol) {
            rep.necessary = NecessaryCondition::Violated;
            rep.verdict = Verdict::Unstable;
            rep.note = "|mu| > 1";
            std::ostringstream os;
            os << "A_{-1} eigenvalue " << c.mu << " lies outside the unit circle: a root chain has Re -> ln|mu| > 0";
            rep.notes.push_back(os.str());
            return rep;
        }
    }

    try {
        rep.roots = locate_window_roots(sys, window);
    } catch (const Error& e) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "root search failed";
        rep.notes.push_back(e.what());
        return rep;
    }
    for (const auto& r : rep.roots) rep.spectral_abscissa_window = std::max(rep.spectral_abscissa_window, r.lambda.real());

    for (const auto& r : rep.roots) {
        if (r.lambda.real() >= -kAxisTol) {
            rep.necessary = NecessaryCondition::Violated;
            rep.violating_root = r.lambda;
            rep.verdict = Verdict::Unstable;
            rep.note = "root in closed right half-plane";
            std::ostringstream os;
            os << "root " << r.lambda << " has Re >= 0";
            rep.notes.push_back(os.str());
            return rep;
        }
    }
    rep.necessary = NecessaryCondition::Holds;

    if (rep.sigma1.empty()) {
        const bool near_axis = std::any_of(rep.roots.begin(), rep.roots.end(),
                                           [&](const RootRecord& r) { return r.lambda.real() >= -window.epsilon; });
        if (near_axis) {
            rep.verdict = Verdict::Inconclusive;
            rep.note = "roots within epsilon of the axis";
        } else {
            rep.verdict = Verdict::ExponentiallyStableEvidence;
            rep.note = "on evidence window";
        }
        return rep;
    }

    const bool all_simple = std::all_of(rep.sigma1.begin(), rep.sigma1.end(), [](const EigenCluster& c) { return c.alg_mult == 1; });
    const bool jordan = std::any_of(rep.sigma1.begin(), rep.sigma1.end(), [](const EigenCluster& c) { return c.geo_mult < c.alg_mult; });
    if (all_simple) {
        rep.verdict = Verdict::StronglyStable;
        rep.branch = "i";
        rep.note = "on evidence window";
        return rep;
    }
    if (jordan) {
        rep.verdict = Verdict::Unstable;
        rep.branch = "ii";
        rep.note = "Jordan block in sigma1";
        return rep;
    }

    rep.verdict = Verdict::DilemmaCaseIII;
    rep.branch = "iii";
    const auto part = spectral_partition(rep.roots, window.epsilon);
    if (part.l1.empty()) {
        rep.note = "no L1 roots in window";
        return rep;
    }
    const bool deficient = std::any_of(part.l1.begin(), part.l1.end(), [](const RootRecord& r) { return r.geo_mult < r.alg_mult; });
    rep.note = deficient ? "root vectors present" : "eigenvectors only";
    rep.notes.push_back(deficient ? "some L1 root has geo_mult < alg_mult: unstable pattern"
                                  : "every L1 root is semisimple: stable pattern");
    return rep;
}

}  // namespace nds
