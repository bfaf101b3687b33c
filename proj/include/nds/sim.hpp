#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nds/model.hpp"

namespace nds {

/// Initial data on [-1, 0]: z and its derivative at theta_i = -1 + i/M.
struct History {
    CMatrix z;
    CMatrix dz;

    int grid_m() const { return static_cast<int>(z.cols()) - 1; }
};

struct Trajectory {
    double h = 0.0;
    int grid_m = 0;
    std::vector<double> times;  // t_j = (j - M) h, j = 0..; history first
    CMatrix z;                  // n x times.size()
    CMatrix dz_left;            // left limits of z'
    CMatrix dz_right;           // right limits (differ only at integer times)
    CMatrix a_minus1;
    double start_jump = 0.0;    // |z'(0+) - z'(0-)|
    bool compatibility_warning = false;

    int steps() const { return static_cast<int>(times.size()) - grid_m - 1; }
};

/// Method of steps on the grid h = 1/M aligned with the delay. The step is
/// implicit in z'(t_n) through the theta = 0 ends of both distributed terms.
Trajectory simulate(const NeutralSystem& sys, const History& initial, double t_end, int grid_m);

/// (t, |x(t)|) at multiples of 0.5, |x|^2 = |z(t) - A_{-1} z(t-1)|^2 + int |z(t+th)|^2.
std::vector<std::pair<double, double>> m2_norm_trace(const Trajectory& traj);

enum class Growth { Decaying, Bounded, Growing };
const char* to_string(Growth g);

struct GrowthResult {
    Growth verdict = Growth::Bounded;
    double linear_slope = 0.0;
    double linear_r2 = 0.0;
    double log_slope = 0.0;
    double initial_norm = 0.0;
};

/// Least-squares fits of norm and log-norm on [t_split, T].
GrowthResult growth_verdict(const std::vector<std::pair<double, double>>& trace, double t_split);

/// Built-in histories: "trig" (cos pi th, sin pi th, ...), "exp" (e^{-th} in
/// every component) and "rootvec" (Jordan-chain directions of the first lattice roots).
History builtin_history(const std::string& name, const NeutralSystem& sys, int grid_m);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int stride = 1);

}  // namespace nds
