#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nds/linalg.hpp"
#include "nds/spectrum.hpp"

namespace nds {

enum class NecessaryCondition { Holds, Violated, Unknown };
enum class Verdict { StronglyStable, Unstable, DilemmaCaseIII, ExponentiallyStableEvidence, Inconclusive };

const char* to_string(NecessaryCondition c);
const char* to_string(Verdict v);

struct ClassificationReport {
    std::vector<EigenCluster> structure;  // all distinct eigenvalues of A_{-1}
    std::vector<EigenCluster> sigma1;
    NecessaryCondition necessary = NecessaryCondition::Unknown;
    std::optional<cplx> violating_root;
    Verdict verdict = Verdict::Inconclusive;
    std::string branch;  // "i", "ii", "iii" when the trichotomy decided the verdict
    std::string note;    // short qualifier for the verdict line
    double spectral_abscissa_window = 0.0;
    SpectralWindow window;
    std::vector<RootRecord> roots;
    std::vector<std::string> notes;

    /// "DilemmaCaseIII (eigenvectors only)" and the like.
    std::string verdict_line() const;
};

/// Distinct eigenvalues of A_{-1} with algebraic and geometric multiplicity.
std::vector<EigenCluster> delay_matrix_structure(const CMatrix& a_minus1);

/// Entries on the unit circle: ||mu| - 1| < tol.
std::vector<EigenCluster> sigma1_of(const std::vector<EigenCluster>& structure, double tol = kUnitCircleTol);

/// Trichotomy decision on the evidence window. k_max <= 0 derives the lattice
/// range from the window; epsilon is the strip half-width.
ClassificationReport classify_system(const NeutralSystem& sys, const SpectralWindow& window);

}  // namespace nds
