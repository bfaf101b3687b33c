#include "nds/sim.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "nds/linalg.hpp"
#include "nds/spectrum.hpp"

namespace nds {

namespace {

constexpr double kCompatTol = 1e-3;

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    const double mean = sy / n;
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace

const char* to_string(Growth g) {
    switch (g) {
        case Growth::Decaying: return "Decaying";
        case Growth::Bounded: return "Bounded";
        case Growth::Growing: return "Growing";
    }
    return "Bounded";
}

Trajectory simulate(const NeutralSystem& sys, const History& initial, double t_end, int grid_m) {
    const Eigen::Index n = sys.n();
    if (grid_m < kMinGrid) throw Error(ErrorKind::InvalidInput, "sim", "M must be >= " + std::to_string(kMinGrid));
    if (initial.z.rows() != n || initial.dz.rows() != n || initial.grid_m() != grid_m || initial.dz.cols() != initial.z.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "sim", "history must be n x (M+1) for z and z'");
    }
    if (!(t_end > 0.0)) throw Error(ErrorKind::InvalidInput, "sim", "T must be positive");
    const int m = grid_m;
    const double h = 1.0 / m;
    const int steps = static_cast<int>(std::ceil(t_end * m - 1e-9));
    const int total = m + 1 + steps;

    Trajectory tr;
    tr.h = h;
    tr.grid_m = m;
    tr.a_minus1 = sys.a_minus1();
    tr.times.resize(static_cast<std::size_t>(total));
    for (int j = 0; j < total; ++j) tr.times[static_cast<std::size_t>(j)] = static_cast<double>(j - m) * h;
    tr.z = CMatrix::Zero(n, total);
    tr.dz_left = CMatrix::Zero(n, total);
    tr.z.leftCols(m + 1) = initial.z;
    tr.dz_left.leftCols(m + 1) = initial.dz;
    tr.dz_right = tr.dz_left;

    const auto w = quad::trapezoid_weights(m);
    const auto a2 = quad::sample_kernel(sys.a2(), n, m);
    const auto a3 = quad::sample_kernel(sys.a3(), n, m);
    const CMatrix& am1 = sys.a_minus1();

    auto is_integer_node = [m](int j) { return j >= m && (j - m) % m == 0; };
    // z' used by the quadrature at an interior node: averaged across a jump.
    auto dz_interior = [&](int j) -> CVector {
        if (is_integer_node(j)) return 0.5 * (tr.dz_left.col(j) + tr.dz_right.col(j));
        return tr.dz_left.col(j);
    };
    // Known part of the right-hand side at t_j, excluding the theta = 0 node.
    auto history_part = [&](int j) {
        CVector c = am1 * tr.dz_left.col(j - m);
        c += w[0] * (a2[0] * tr.dz_right.col(j - m) + a3[0] * tr.z.col(j - m));
        for (int i = 1; i < m; ++i) {
            const int q = j - m + i;
            c += w[static_cast<std::size_t>(i)] * (a2[static_cast<std::size_t>(i)] * dz_interior(q) +
                                                   a3[static_cast<std::size_t>(i)] * tr.z.col(q));
        }
        return c;
    };

    // t = 0: explicit from the history.
    {
        const int j = m;
        CVector c = history_part(j) + w[static_cast<std::size_t>(m)] *
                                          (a2[static_cast<std::size_t>(m)] * tr.dz_left.col(j) +
                                           a3[static_cast<std::size_t>(m)] * tr.z.col(j));
        tr.dz_right.col(j) = c;
        tr.start_jump = (c - tr.dz_left.col(j)).norm();
        tr.compatibility_warning = tr.start_jump > kCompatTol;
    }

    const CMatrix step_matrix = CMatrix::Identity(n, n) - (0.5 * h) * a2[static_cast<std::size_t>(m)] -
                                (0.25 * h * h) * a3[static_cast<std::size_t>(m)];
    Eigen::PartialPivLU<CMatrix> lu(step_matrix);
    // Cancellation between I and the kernel terms is judged against their combined size.
    const double term_size = 1.0 + (0.5 * h) * a2[static_cast<std::size_t>(m)].norm() +
                             (0.25 * h * h) * a3[static_cast<std::size_t>(m)].norm();
    const double sigma_min = Eigen::JacobiSVD<CMatrix>(step_matrix).singularValues().minCoeff();
    if (sigma_min < 1e-12 * term_size || cond1_estimate(step_matrix) > 1e12) {
        throw Error(ErrorKind::SingularStep, "sim", "step matrix I - (h/2)A2(0) is singular; increase M");
    }

    for (int j = m + 1; j < total; ++j) {
        const CVector prev_z = tr.z.col(j - 1);
        const CVector prev_dz = tr.dz_right.col(j - 1);
        const CVector rhs = history_part(j) +
                            (0.5 * h) * (a3[static_cast<std::size_t>(m)] * (prev_z + (0.5 * h) * prev_dz));
        const CVector dz = lu.solve(rhs);
        tr.dz_left.col(j) = dz;
        tr.z.col(j) = prev_z + (0.5 * h) * (prev_dz + dz);
        if (is_integer_node(j)) {
            tr.dz_right.col(j) = dz + am1 * (tr.dz_right.col(j - m) - tr.dz_left.col(j - m));
        } else {
            tr.dz_right.col(j) = dz;
        }
        if (!all_finite(tr.z.col(j)) || !all_finite(tr.dz_right.col(j))) {
            throw Error(ErrorKind::NonFiniteState, "sim", "state overflowed at t = " + std::to_string(tr.times[static_cast<std::size_t>(j)]));
        }
    }
    return tr;
}

std::vector<std::pair<double, double>> m2_norm_trace(const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    const int m = traj.grid_m;
    const auto w = quad::trapezoid_weights(m);
    const int half = m / 2;
    const int last = static_cast<int>(traj.times.size()) - 1;
    for (int j = m; j <= last; j += (m % 2 == 0 ? half : m)) {
        const CVector head = traj.z.col(j) - traj.a_minus1 * traj.z.col(j - m);
        double sq = head.squaredNorm();
        for (int i = 0; i <= m; ++i) sq += w[static_cast<std::size_t>(i)] * traj.z.col(j - m + i).squaredNorm();
        out.emplace_back(traj.times[static_cast<std::size_t>(j)], std::sqrt(sq));
    }
    return out;
}

GrowthResult growth_verdict(const std::vector<std::pair<double, double>>& trace, double t_split) {
    if (trace.size() < 3 || !(t_split > 0.0) || trace.back().first < 3.0 * t_split) {
        throw Error(ErrorKind::InsufficientData, "sim", "trace must span at least 3 * t_split");
    }
    std::vector<double> t, v, lv;
    bool has_zero = false;
    for (const auto& [ti, vi] : trace) {
        if (ti < t_split) continue;
        t.push_back(ti);
        v.push_back(vi);
        if (vi > 0.0) {
            lv.push_back(std::log(vi));
        } else {
            has_zero = true;
        }
    }
    if (t.size() < 3) throw Error(ErrorKind::InsufficientData, "sim", "fewer than 3 samples after t_split");
    GrowthResult g;
    g.initial_norm = trace.front().second;
    const auto lin = fit_line(t, v);
    g.linear_slope = lin.slope;
    g.linear_r2 = lin.r2;
    g.log_slope = has_zero ? 0.0 : fit_line(t, lv).slope;
    if (g.linear_slope > 1e-2 * g.initial_norm && g.linear_slope > 0.0) {
        g.verdict = Growth::Growing;
    } else if (!has_zero && g.log_slope < -1e-3) {
        g.verdict = Growth::Decaying;
    } else {
        g.verdict = Growth::Bounded;
    }
    return g;
}

History builtin_history(const std::string& name, const NeutralSystem& sys, int grid_m) {
    const Eigen::Index n = sys.n();
    if (grid_m < kMinGrid) throw Error(ErrorKind::InvalidInput, "sim", "M must be >= " + std::to_string(kMinGrid));
    History hist{CMatrix::Zero(n, grid_m + 1), CMatrix::Zero(n, grid_m + 1)};
    auto theta = [grid_m](int i) { return -1.0 + static_cast<double>(i) / grid_m; };
    if (name == "trig") {
        for (int i = 0; i <= grid_m; ++i) {
            for (Eigen::Index c = 0; c < n; ++c) {
                const double phase = kPi * theta(i) - 0.5 * kPi * static_cast<double>(c);
                hist.z(c, i) = std::cos(phase);
                hist.dz(c, i) = -kPi * std::sin(phase);
            }
        }
        return hist;
    }
    if (name == "exp") {
        for (int i = 0; i <= grid_m; ++i) {
            hist.z.col(i).setConstant(std::exp(-theta(i)));
            hist.dz.col(i).setConstant(-std::exp(-theta(i)));
        }
        return hist;
    }
    if (name == "rootvec") {
        // Sum over the first lattice roots of e^{l th}(x1 + th x0), with x0 in
        // Ker Delta and Delta x1 = -Delta' x0 when the kernel is deficient.
        const auto roots = lattice_roots(sys, 0, 4);
        for (const auto& lr : roots) {
            const cplx l = lr.root.lambda;
            const CMatrix d = char_matrix(sys, l);
            const auto ker = kernel_basis(d, 1e-8, char_matrix_scale(sys, l));
            if (ker.empty()) continue;
            const CVector x0 = ker.front();
            CVector x1 = CVector::Zero(n);
            if (lr.root.geo_mult < lr.root.alg_mult) {
                Eigen::JacobiSVD<CMatrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
                svd.setThreshold(1e-8);
                x1 = svd.solve(-char_matrix_derivative(sys, l) * x0);
            }
            for (int i = 0; i <= grid_m; ++i) {
                const double th = theta(i);
                const cplx e = std::exp(l * th);
                const CVector v = x1 + th * x0;
                hist.z.col(i) += e * v;
                hist.dz.col(i) += l * e * v + e * x0;
            }
        }
        const double scale = hist.z.cwiseAbs().maxCoeff();
        if (scale > 0.0) {
            hist.z /= scale;
            hist.dz /= scale;
        }
        return hist;
    }
    throw Error(ErrorKind::InvalidInput, "sim", "unknown builtin history '" + name + "'");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int stride) {
    const Eigen::Index n = traj.z.rows();
    const auto trace = m2_norm_trace(traj);
    os << "t";
    for (Eigen::Index c = 0; c < n; ++c) os << ",z" << c << "_re,z" << c << "_im";
    for (Eigen::Index c = 0; c < n; ++c) os << ",dz" << c << "_re,dz" << c << "_im";
    os << ",norm\n";
    os.precision(12);
    std::size_t next_norm = 0;
    const int total = static_cast<int>(traj.times.size());
    for (int j = traj.grid_m; j < total; j += std::max(1, stride)) {
        const double t = traj.times[static_cast<std::size_t>(j)];
        os << t;
        for (Eigen::Index c = 0; c < n; ++c) os << ',' << traj.z(c, j).real() << ',' << traj.z(c, j).imag();
        for (Eigen::Index c = 0; c < n; ++c) os << ',' << traj.dz_right(c, j).real() << ',' << traj.dz_right(c, j).imag();
        while (next_norm < trace.size() && trace[next_norm].first < t - 1e-12) ++next_norm;
        if (next_norm < trace.size() && std::abs(trace[next_norm].first - t) < 1e-12) {
            os << ',' << trace[next_norm].second;
        } else {
            os << ',';
        }
        os << '\n';
    }
}

}  // namespace nds
