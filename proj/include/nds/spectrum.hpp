#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nds/model.hpp"

namespace nds {

/// Position of a root in the asymptotic lattice: circle around
/// ln|mu_m| + i(arg mu_m + 2 pi k). m is 1-based over distinct nonzero eigenvalues of A_{-1}.
struct LatticeTag {
    int m = 0;
    int k = 0;
    cplx mu;
    cplx seed;
};

struct RootRecord {
    cplx lambda;
    double residual = 0.0;  // |det Delta(lambda)|
    double scale = 0.0;     // max |det Delta| on the multiplicity circle
    int alg_mult = 1;
    int geo_mult = 1;
    std::optional<LatticeTag> lattice;
};

struct SpectralWindow {
    double re_min = -3.0;
    double re_max = 1.0;
    double im_min = -40.0;
    double im_max = 40.0;
    double epsilon = 0.05;
    int k_max = 0;  // 0: derived from the imaginary extent

    void validate() const;
    int effective_k_max() const;
};

struct Seed {
    int m;
    int k;
    cplx mu;
    cplx lambda;
};

inline constexpr double kUnitCircleTol = 1e-9;
inline constexpr double kMultiplicityRadius = 1e-4;

/// Seeds ln|mu_m| + i(arg mu_m + 2 pi k) for |k| <= k_max and each distinct nonzero mu_m.
std::vector<Seed> asymptotic_seeds(const NeutralSystem& sys, int k_max);

namespace contour {

using Func = std::function<cplx(cplx)>;

struct Winding {
    int count = 0;
    double min_abs = 0.0;
    double max_abs = 0.0;
    int samples = 0;
};

/// Argument-principle count on the circle |z - center| = radius.
Winding circle(const Func& f, cplx center, double radius);

/// Argument-principle count on the boundary of [re0, re1] x [im0, im1], counter-clockwise.
Winding rectangle(const Func& f, double re0, double re1, double im0, double im1);

}  // namespace contour

/// Roots of det Delta inside the circle, with multiplicity.
int winding_number(const NeutralSystem& sys, cplx center, double radius);

int winding_number_rect(const NeutralSystem& sys, double re0, double re1, double im0, double im1);

/// Newton refinement on det Delta (multiplicity-robust) with quadrisection fallback.
RootRecord refine_root(const NeutralSystem& sys, cplx seed);

/// Every root inside the window exactly once, sorted by (Re, Im); lattice tags
/// are attached to roots lying in a seeded circle.
std::vector<RootRecord> locate_window_roots(const NeutralSystem& sys, const SpectralWindow& window);

/// Tag roots that fall inside a lattice circle (radius: a third of the smallest seed spacing).
void attach_lattice_tags(const NeutralSystem& sys, std::vector<RootRecord>& roots, int k_max);

bool in_sigma1(const RootRecord& r);

struct Partition {
    std::vector<RootRecord> l0;
    std::vector<RootRecord> l1;
    std::vector<RootRecord> l2;
};

Partition spectral_partition(const std::vector<RootRecord>& roots, double epsilon);

/// "L0", "L1" or "L2" under the same rule as spectral_partition.
const char* partition_label(const RootRecord& r, double epsilon);

struct LatticeRoot {
    Seed seed;
    RootRecord root;
    double radius;  // |lambda - seed|
};

/// Roots refined from every seed with 0 <= k <= k_max (k >= 0 half of the lattice).
std::vector<LatticeRoot> lattice_roots(const NeutralSystem& sys, int k_min, int k_max);

struct RadiiReport {
    std::vector<double> radii;  // r_k, k = 0..k_max
    bool decreasing = false;    // non-increasing over the last half of the range
    bool cauchy = false;        // partial sums over the last quarter agree within tol
    double tail_spread = 0.0;   // max |S_i - S_j| over that quarter
    bool summable_evidence = false;
    std::string flag;           // "InsufficientData" when k_max < 2
};

RadiiReport radii_summability_check(const NeutralSystem& sys, int k_max, double cauchy_tol = 1e-6);

void write_roots_csv(std::ostream& os, const std::vector<RootRecord>& roots, double epsilon);

}  // namespace nds
