#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nds/linalg.hpp"
#include "nds/spectrum.hpp"

namespace nds {

inline constexpr double kDefaultMCut = 50.0;
inline constexpr int kScalarizationDraws = 64;

struct RankCheck3 {
    RootRecord root;
    int rank = 0;
    bool pass = false;
    bool via_condition4 = false;  // high-frequency lattice root checked through rank(mu I - A_{-1}, B)
};

struct RankCheck4 {
    cplx mu;
    int rank = 0;
    bool pass = false;
};

/// rank [Delta(lambda) B] = n for every root with Re >= re_floor. Lattice roots
/// with |Im| > m_cut are checked through their A_{-1} eigenvalue instead.
std::vector<RankCheck3> check_condition3(const NeutralSystem& sys, const std::vector<RootRecord>& roots,
                                         double m_cut = kDefaultMCut, double re_floor = -1e-9);
std::vector<RankCheck3> check_condition3(const NeutralSystem& sys, const SpectralWindow& window,
                                         double m_cut = kDefaultMCut);

/// rank [mu I - A_{-1}  B] = n for every mu on the unit circle.
std::vector<RankCheck4> check_condition4(const CMatrix& a_minus1, const CMatrix& b);

struct Scalarization {
    CVector c;
    CVector b;            // B c
    int draws = 0;
    double worst_margin;  // smallest ratio |<b, y>| / threshold over the tested vectors
};

/// Finds c with b = B c not orthogonal to any left eigenvector of A_{-1} on the
/// unit circle nor to the kernel vectors of Delta*(conj lambda) at the given roots
/// with Re >= 0. The first candidate is e_1, then seeded complex Gaussian draws.
Scalarization scalarize_input(const NeutralSystem& sys, const CMatrix& b, const std::vector<RootRecord>& roots,
                              std::uint64_t seed = 1);

struct PairingSample {
    int m = 0;
    int k = 0;
    cplx lambda;
    double value = 0.0;  // k |Y^H b| / |lambda|
};

struct PairingAsymptotics {
    std::vector<PairingSample> samples;
    bool evidence = false;  // last quartile within 25% of its median, for every m
};

/// Lattice roots on the unit-circle chains, k in [k_min, k_max].
PairingAsymptotics pairing_asymptotics_check(const NeutralSystem& sys, const CVector& b, int k_min, int k_max);

struct TargetInput {
    int m = 0;
    int k = 0;
    cplx lambda;
    double radius = 0.0;
};

struct Target {
    int m = 0;
    int k = 0;
    cplx lambda;
    cplx target;
};

struct RejectedTarget {
    int m = 0;
    int k = 0;
    cplx lambda;
    std::string reason;
};

struct AssignmentTargets {
    std::vector<Target> accepted;
    std::vector<RejectedTarget> rejected;
};

/// lambda_hat = lambda - margin * r; entries that would not reach Re < 0 are rejected.
AssignmentTargets assignment_targets(const std::vector<TargetInput>& roots, double margin);
std::vector<TargetInput> target_inputs(const std::vector<LatticeRoot>& roots);

/// Single-input modal placement: gain row K with eig(diag(eigs) - beta K) = targets.
CVector place_modal(const CVector& eigs, const CVector& beta, const CVector& targets);

struct Placement {
    CMatrix gain;          // p x r, F = c K
    CVector modal_gain;    // K
    CVector beta;
    CVector closed_loop;   // eigenvalues of diag(eigs) - beta K, matched to targets
    double max_deviation = 0.0;
};

/// Modal pole placement for a finite set of simple roots (at most 20).
Placement finite_pole_placement(const NeutralSystem& sys, const std::vector<RootRecord>& lambda2, const CMatrix& b,
                                const CVector& targets, std::uint64_t seed = 1);

struct StabilizeOptions {
    double margin = 0.5;
    double m_cut = kDefaultMCut;
    std::uint64_t seed = 1;
};

struct StabilizabilityReport {
    bool cond1 = false;
    bool cond2 = false;
    std::vector<RankCheck3> cond3;
    std::vector<RankCheck4> cond4;
    std::optional<Scalarization> scalarization;
    AssignmentTargets targets;
    std::vector<RootRecord> lambda2;
    std::optional<Placement> finite_gain;
    std::vector<std::string> notes;
    bool pass = false;
};

StabilizabilityReport stabilizability_report(const NeutralSystem& sys, const SpectralWindow& window,
                                             const StabilizeOptions& opts = {});

void write_report(std::ostream& os, const StabilizabilityReport& rep);
void write_gain_csv(std::ostream& os, const CMatrix& gain);

}  // namespace nds
