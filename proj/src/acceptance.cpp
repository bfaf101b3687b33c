#include "nds/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "nds/eigen.hpp"
#include "nds/pontryagin.hpp"
#include "nds/sim.hpp"
#include "nds/stabilize.hpp"

namespace nds {

namespace {

// Pinned tolerances.
constexpr double kLhpMargin = 1e-6;
constexpr double kRootResidual = 1e-9;
constexpr double kLhpSeconds = 30.0;
constexpr double kCountEps = 1.0;
constexpr double kCauchyTol = 1e-6;
constexpr int kRadiiFrom = 20;
constexpr int kRadiiTo = 100;
constexpr double kBiorthTol = 5e-3;
constexpr double kHalvingFactor = 2.0;
constexpr double kPairingRatio = 10.0;
constexpr double kPairingFloor = 1e-2;
constexpr double kResolventTol = 1e-6;
constexpr double kDomainTol = 1e-8;
constexpr double kGrowthR2 = 0.9;
constexpr double kSimSeconds = 20.0;
constexpr double kSameSpectrum = 1e-9;
constexpr double kExclusionTol = 1e-6;
constexpr double kPlacementTol = 1e-6;
constexpr double kOrderFactor = 3.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

SpectralWindow example_window() {
    SpectralWindow w;
    w.re_min = -3.0;
    w.re_max = 1.0;
    w.im_min = -40.0 * kPi;
    w.im_max = 40.0 * kPi;
    return w;
}

CriterionResult lhp_verification() {
    CriterionResult r{1, "lhp-verification", true, ""};
    std::ostringstream os;
    for (double b : {0.5, 1.0, 2.0}) {
        const auto t0 = Clock::now();
        const auto sys = make_dilemma_system(b, 0.0);
        const auto roots = locate_window_roots(sys, example_window());
        const double secs = seconds_since(t0);
        double max_re = -1e300, max_res = 0.0;
        for (const auto& root : roots) {
            const cplx l = root.lambda;
            const cplx f = l * std::exp(l) + l + b * std::exp(l);
            max_re = std::max(max_re, l.real());
            max_res = std::max({max_res, root.residual, std::abs(f)});
        }
        const bool ok = !roots.empty() && max_re < -kLhpMargin && max_res < kRootResidual && secs < kLhpSeconds;
        if (secs >= kLhpSeconds) os << "[b=" << b << " exceeded runtime] ";
        r.pass = r.pass && ok;
        os << "b=" << b << ": " << roots.size() << " roots, max Re " << sci(max_re) << ", max residual " << sci(max_res)
           << "; ";
    }
    r.detail = os.str();
    return r;
}

CriterionResult zero_count() {
    CriterionResult r{2, "zero-count", true, ""};
    const auto [f, g] = split_fg(QuasiPolynomial::parse("1,1,1; 1,0,1; 0,1,1"));
    std::ostringstream os;
    for (int k : {2, 3, 4, 6}) {
        const auto cc = count_check(f, 1, 1, k, kCountEps);
        const double lo = -2.0 * kPi * k + kCountEps;
        const double hi = 2.0 * kPi * k + kCountEps;
        const bool alt = alternation_check(f, g, lo, hi);
        double min_sign = 1e300;
        for (double y : real_zeros(f, lo, hi).zeros) min_sign = std::min(min_sign, -g(y) * f.derivative(y));
        const bool ok = cc.pass && !cc.inconclusive && alt && min_sign > 0.0;
        r.pass = r.pass && ok;
        os << "k=" << k << ": " << cc.count << "/" << cc.expected << (alt ? " alt" : " no-alt") << " min(-GF')="
           << sci(min_sign) << "; ";
    }
    r.detail = os.str();
    return r;
}

CriterionResult radii_summability() {
    CriterionResult r{3, "radii-summability", false, ""};
    const auto rep = radii_summability_check(make_dilemma_system(1.0, 0.0), kRadiiTo, kCauchyTol);
    bool decreasing = true;
    for (int k = kRadiiFrom; k < kRadiiTo; ++k) {
        if (rep.radii[static_cast<std::size_t>(k) + 1] > rep.radii[static_cast<std::size_t>(k)] + 1e-12) decreasing = false;
    }
    // Largest gap between partial sums S_i, S_j with i, j in [20, 100].
    double spread = 0.0;
    for (int k = kRadiiFrom + 1; k <= kRadiiTo; ++k) spread += rep.radii[static_cast<std::size_t>(k)] * rep.radii[static_cast<std::size_t>(k)];
    r.pass = decreasing && spread < kCauchyTol;
    std::ostringstream os;
    os << "r0=" << sci(rep.radii.front()) << " r20=" << sci(rep.radii[kRadiiFrom]) << " r100=" << sci(rep.radii.back())
       << ", decreasing k>=20: " << (decreasing ? "yes" : "no") << ", S100-S20=" << sci(spread)
       << ", last-quarter spread=" << sci(rep.tail_spread) << " (tol " << sci(kCauchyTol) << ")";
    r.detail = os.str();
    return r;
}

struct BiorthStats {
    double off = 0.0;
    double diag = 0.0;
    std::size_t pairs = 0;
};

BiorthStats biorth_stats(const NeutralSystem& sys, const std::vector<LatticeRoot>& roots, int grid_m) {
    std::vector<EigenPair> pairs;
    for (const auto& lr : roots) {
        for (auto& p : eigenpairs_at(sys, lr.root, grid_m)) pairs.push_back(std::move(p));
    }
    BiorthStats s;
    s.pairs = pairs.size();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            const cplx v = m2_inner_product(pairs[i].phi, pairs[j].psi);
            if (i == j) {
                s.diag = std::max(s.diag, std::abs(v - pairs[i].pairing) / std::abs(pairs[i].pairing));
            } else {
                s.off = std::max(s.off, std::abs(v) / (m2_norm(pairs[i].phi) * m2_norm(pairs[j].psi)));
            }
        }
    }
    return s;
}

CriterionResult biorthogonality() {
    CriterionResult r{4, "biorthogonality", false, ""};
    const auto sys = make_dilemma_system(1.0, 0.0);
    const auto roots = lattice_roots(sys, 0, 4);  // 5 roots, two eigenpairs each
    const auto a = biorth_stats(sys, roots, 512);
    const auto b = biorth_stats(sys, roots, 1024);
    const bool halves = b.off * kHalvingFactor <= a.off;
    r.pass = a.pairs == 10 && a.off < kBiorthTol && a.diag < kBiorthTol && halves;
    std::ostringstream os;
    os << a.pairs << " pairs; off-diagonal " << sci(a.off) << " (M=512) -> " << sci(b.off)
       << " (M=1024); diagonal rel. error " << sci(a.diag);
    r.detail = os.str();
    return r;
}

CriterionResult pairing_bound() {
    CriterionResult r{5, "pairing-bound", false, ""};
    const auto sys = make_dilemma_system(1.0, 0.0);
    std::vector<RootRecord> roots;
    for (const auto& lr : lattice_roots(sys, 10, 200)) roots.push_back(lr.root);
    const auto pb = pairing_bound_scan(sys, roots);
    r.pass = pb.min_val > kPairingFloor && pb.max_val / pb.min_val < kPairingRatio;
    std::ostringstream os;
    os << roots.size() << " roots; min " << std::setprecision(6) << pb.min_val << ", max " << pb.max_val
       << ", ratio " << pb.max_val / pb.min_val;
    r.detail = os.str();
    return r;
}

StateSegment random_segment(std::mt19937_64& rng, Eigen::Index n, int grid_m) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    StateSegment g(n, grid_m);
    for (Eigen::Index c = 0; c < n; ++c) {
        g.y(c) = cplx(u(rng), u(rng));
        const cplx a0(u(rng), u(rng)), a1(u(rng), u(rng)), a2(u(rng), u(rng));
        const double w = 1.0 + 3.0 * std::abs(u(rng));
        for (int i = 0; i <= grid_m; ++i) {
            const double t = g.theta(i);
            g.z(c, i) = a0 + a1 * t + a2 * std::cos(w * t);
        }
    }
    return g;
}

CriterionResult resolvent_contract() {
    CriterionResult r{6, "resolvent-contract", true, ""};
    const auto sys = make_dilemma_system(1.0, 0.0);
    const int grid_m = 512;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> re(0.2, 2.0), im(-6.0, 6.0);
    double worst_id = 0.0, worst_dom = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const cplx l(re(rng), im(rng)), mu(re(rng), im(rng));
        const auto g = random_segment(rng, sys.n(), grid_m);
        const auto rl = resolvent_apply(sys, l, g);
        const auto rm = resolvent_apply(sys, mu, g);
        // R(l) = (A - l)^{-1}, so R(l) - R(mu) = (l - mu) R(l) R(mu).
        const auto lhs = rl - rm;
        const auto rhs = (l - mu) * resolvent_apply(sys, l, rm);
        worst_id = std::max(worst_id, m2_norm(lhs - rhs) / m2_norm(lhs));
        for (const auto* out : {&rl, &rm}) {
            const CVector dom = out->y - (out->z.col(grid_m) - sys.a_minus1() * out->z.col(0));
            worst_dom = std::max(worst_dom, dom.norm() / std::max(1.0, out->y.norm()));
        }
    }
    r.pass = worst_id < kResolventTol && worst_dom < kDomainTol;
    r.detail = "5 pairs; identity rel. error " + sci(worst_id) + ", domain relation " + sci(worst_dom);
    return r;
}

CriterionResult stability_dilemma() {
    CriterionResult r{7, "stability-dilemma", false, ""};
    const int grid_m = 256;
    const auto t0 = Clock::now();
    // The same history (aligned with the s = 1 root vectors) drives both systems.
    const auto hist = builtin_history("rootvec", make_dilemma_system(1.0, 1.0), grid_m);
    GrowthResult g[2];
    for (int s = 0; s < 2; ++s) {
        const auto tr = simulate(make_dilemma_system(1.0, s), hist, 60.0, grid_m);
        g[s] = growth_verdict(m2_norm_trace(tr), 20.0);
    }
    const double secs = seconds_since(t0);
    const bool s0_ok = g[0].verdict == Growth::Bounded || g[0].verdict == Growth::Decaying;
    const bool s1_ok = g[1].verdict == Growth::Growing && g[1].linear_slope > 0.0 && g[1].linear_r2 > kGrowthR2;
    r.pass = s0_ok && s1_ok && secs < kSimSeconds;
    std::ostringstream os;
    os << "s=0 " << to_string(g[0].verdict) << " (log slope " << sci(g[0].log_slope) << "), s=1 "
       << to_string(g[1].verdict) << " (slope " << sci(g[1].linear_slope) << ", R2 " << std::fixed
       << std::setprecision(4) << g[1].linear_r2 << ")";
    if (secs >= kSimSeconds) os << " [runtime exceeded]";
    r.detail = os.str();
    return r;
}

CriterionResult multiplicity_split() {
    CriterionResult r{8, "multiplicity-split", true, ""};
    const auto r0 = lattice_roots(make_dilemma_system(1.0, 0.0), 0, 4);
    const auto r1 = lattice_roots(make_dilemma_system(1.0, 1.0), 0, 4);
    double gap = 0.0;
    std::ostringstream os;
    for (std::size_t i = 0; i < r0.size() && i < r1.size(); ++i) {
        const auto& a = r0[i].root;
        const auto& b = r1[i].root;
        gap = std::max(gap, std::abs(a.lambda - b.lambda));
        const bool ok = a.alg_mult == 2 && b.alg_mult == 2 && a.geo_mult == 2 && b.geo_mult == 1;
        r.pass = r.pass && ok;
        os << "k=" << r0[i].seed.k << " alg " << a.alg_mult << "/" << b.alg_mult << " geo " << a.geo_mult << "/"
           << b.geo_mult << "; ";
    }
    r.pass = r.pass && r0.size() == 5 && r1.size() == 5 && gap < kSameSpectrum;
    os << "root-set gap " << sci(gap);
    r.detail = os.str();
    return r;
}

CriterionResult exclusion_identity() {
    CriterionResult r{9, "exclusion-identity", true, ""};
    // Both solutions w of w^2 + 3w + 1 = 0 are negative reals; w = e^lambda then
    // forces Re lambda = ln|w|, while lambda = w + 1 must also hold.
    const double s5 = std::sqrt(5.0);
    const double w_minus = (-3.0 - s5) / 2.0;
    const double w_plus = (-3.0 + s5) / 2.0;
    const bool quad_ok = std::abs(w_minus * w_minus + 3.0 * w_minus + 1.0) < 1e-12 &&
                         std::abs(w_plus * w_plus + 3.0 * w_plus + 1.0) < 1e-12;
    const bool branch_minus = std::log(-w_minus) > 0.0;
    const bool branch_plus = w_plus + 1.0 > 0.0 && std::abs(w_plus + 1.0 - (s5 - 1.0) / 2.0) < 1e-15;
    r.pass = quad_ok && branch_minus && branch_plus;
    double min_val = 1e300;
    std::size_t count = 0;
    for (double b : {0.5, 1.0, 2.0}) {
        for (const auto& root : locate_window_roots(make_dilemma_system(b, 1.0), example_window())) {
            const cplx l = root.lambda;
            min_val = std::min(min_val, std::abs(1.0 + std::exp(-l) - l * std::exp(-l)));
            ++count;
        }
    }
    r.pass = r.pass && count > 0 && min_val > kExclusionTol;
    std::ostringstream os;
    os << "ln|w-|=" << std::setprecision(6) << std::log(-w_minus) << ", w+ + 1=" << w_plus + 1.0 << "; min |1+e^-l-l e^-l| over "
       << count << " roots " << sci(min_val);
    r.detail = os.str();
    return r;
}

CMatrix col(std::initializer_list<cplx> v) {
    CMatrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (cplx x : v) m(i++, 0) = x;
    return m;
}

CriterionResult stabilizability_logic() {
    CriterionResult r{10, "stabilizability-rank-logic", true, ""};
    std::ostringstream os;
    const CMatrix i2 = CMatrix::Identity(2, 2);
    CMatrix d(2, 2);
    d << -1.0, 0.0, 0.0, 0.5;
    struct Fixture {
        CMatrix am1;
        CMatrix b;
        bool expected;
    };
    const std::vector<Fixture> fixtures = {{-i2, i2, true}, {-i2, col({1.0, 0.0}), false}, {d, col({1.0, 1.0}), true}};
    int correct = 0;
    for (const auto& f : fixtures) {
        const auto c4 = check_condition4(f.am1, f.b);
        const bool pass = std::all_of(c4.begin(), c4.end(), [](const RankCheck4& c) { return c.pass; });
        correct += pass == f.expected;
    }
    r.pass = correct == static_cast<int>(fixtures.size());
    os << "condition4 " << correct << "/" << fixtures.size() << " classified; ";

    int scalar_ok = 0, scalar_total = 0, max_draws = 0;
    for (const auto& f : fixtures) {
        if (!f.expected) continue;
        const auto sys = make_pointwise_system(f.am1, -2.0 * i2, f.b);
        const auto roots = locate_window_roots(sys, example_window());
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            ++scalar_total;
            try {
                const auto sc = scalarize_input(sys, f.b, roots, seed);
                max_draws = std::max(max_draws, sc.draws);
                ++scalar_ok;
            } catch (const Error&) {
            }
        }
    }
    r.pass = r.pass && scalar_ok == scalar_total;
    os << "scalarized " << scalar_ok << "/" << scalar_total << " (max draws " << max_draws << "); ";

    double worst = 0.0;
    bool placed = true;
    try {
        CVector e1(1), b1(1), t1(1);
        e1 << 0.5;
        b1 << 1.0;
        t1 << -1.0;
        const CVector k1 = place_modal(e1, b1, t1);
        placed = placed && std::abs(k1(0) - 1.5) < kPlacementTol;
        CMatrix a0(2, 2);
        a0 << 0.3, 0.0, 0.0, 0.7;
        const auto unstable = make_pointwise_system(CMatrix::Zero(2, 2), a0, col({1.0, 1.0}));
        std::vector<RootRecord> l2;
        for (const auto& root : locate_window_roots(unstable, example_window())) {
            if (root.lambda.real() >= 0.0) l2.push_back(root);
        }
        CVector targets(2);
        targets << -0.5, -0.6;
        const auto pl = finite_pole_placement(unstable, l2, unstable.b(), targets);
        worst = pl.max_deviation;
        placed = placed && l2.size() == 2 && worst < kPlacementTol;
    } catch (const Error& e) {
        placed = false;
        os << "[" << e.what() << "] ";
    }
    r.pass = r.pass && placed;
    os << "placement " << (placed ? "ok" : "failed") << " (max deviation " << sci(worst) << ")";
    r.detail = os.str();
    return r;
}

CriterionResult simulator_order() {
    CriterionResult r{11, "simulator-order", true, ""};
    CMatrix a0(1, 1), am1(1, 1);
    a0 << -1.0;
    am1 << 0.0;
    const auto sys = make_pointwise_system(am1, a0);
    auto terminal = [&](int m) {
        const auto tr = simulate(sys, builtin_history("exp", sys, m), 5.0, m);
        return tr.z(0, tr.z.cols() - 1);
    };
    const cplx ref = terminal(1024);
    std::ostringstream os;
    double prev = 0.0;
    for (int m : {32, 64, 128, 256}) {
        const double err = std::abs(terminal(m) - ref);
        if (prev > 0.0) {
            const double factor = prev / err;
            r.pass = r.pass && factor >= kOrderFactor;
            os << "M=" << m << " factor " << std::fixed << std::setprecision(3) << factor << "; ";
        }
        prev = err;
    }
    r.detail = os.str();
    return r;
}

const std::vector<std::function<CriterionResult()>>& registry() {
    static const std::vector<std::function<CriterionResult()>> all = {
        lhp_verification, zero_count,       radii_summability,  biorthogonality,      pairing_bound,  resolvent_contract,
        stability_dilemma, multiplicity_split, exclusion_identity, stabilizability_logic, simulator_order};
    return all;
}

}  // namespace

CriterionResult run_criterion(int id) {
    const auto& all = registry();
    if (id < 1 || id > static_cast<int>(all.size())) {
        throw Error(ErrorKind::InvalidInput, "acceptance", "criterion id must be in 1.." + std::to_string(all.size()));
    }
    try {
        return all[static_cast<std::size_t>(id - 1)]();
    } catch (const Error& e) {
        return CriterionResult{id, "criterion-" + std::to_string(id), false, std::string("error: ") + e.what()};
    }
}

std::vector<CriterionResult> run_acceptance() {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= static_cast<int>(registry().size()); ++id) out.push_back(run_criterion(id));
    return out;
}

void print_acceptance(std::ostream& os, const std::vector<CriterionResult>& results) {
    int passed = 0;
    for (const auto& r : results) {
        passed += r.pass;
        std::string detail = r.detail;
        while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
        os << (r.pass ? "PASS " : "FAIL ") << std::setw(2) << r.id << ' ' << r.name << ": " << detail << '\n';
    }
    os << passed << "/" << results.size() << " criteria passed\n";
}

}  // namespace nds
