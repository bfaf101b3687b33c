#include <doctest.h>

#include <random>
#include <sstream>

#include "nds/sim.hpp"
#include "oracles.hpp"

using namespace nds;

namespace {

CMatrix scalar(cplx v) {
    CMatrix m(1, 1);
    m << v;
    return m;
}

NeutralSystem decay_system() { return make_pointwise_system(scalar(0.0), scalar(-1.0)); }

History exp_history(int grid_m) {
    History h{CMatrix(1, grid_m + 1), CMatrix(1, grid_m + 1)};
    for (int i = 0; i <= grid_m; ++i) {
        const double th = -1.0 + static_cast<double>(i) / grid_m;
        h.z(0, i) = std::exp(-th);
        h.dz(0, i) = -std::exp(-th);
    }
    return h;
}

double decay_error(int grid_m, double t_end) {
    const auto tr = simulate(decay_system(), exp_history(grid_m), t_end, grid_m);
    double err = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        err = std::max(err, std::abs(tr.z(0, static_cast<Eigen::Index>(j)) - std::exp(-tr.times[j])));
    }
    return err;
}

History random_history(std::mt19937_64& rng, Eigen::Index n, int grid_m) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    History h{CMatrix(n, grid_m + 1), CMatrix(n, grid_m + 1)};
    for (Eigen::Index c = 0; c < n; ++c) {
        const cplx a(u(rng), u(rng)), b(u(rng), u(rng));
        const double w = 1.0 + std::abs(u(rng));
        for (int i = 0; i <= grid_m; ++i) {
            const double th = -1.0 + static_cast<double>(i) / grid_m;
            h.z(c, i) = a * std::sin(w * th) + b;
            h.dz(c, i) = a * w * std::cos(w * th);
        }
    }
    return h;
}

std::vector<std::pair<double, double>> synthetic(const std::function<double(double)>& f, double t_end) {
    std::vector<std::pair<double, double>> out;
    for (double t = 0.0; t <= t_end + 1e-12; t += 0.5) out.emplace_back(t, f(t));
    return out;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("exact exponential decay is reproduced") {
    CHECK(decay_error(256, 5.0) < 1e-4);
    const auto tr = simulate(decay_system(), exp_history(256), 5.0, 256);
    CHECK_FALSE(tr.compatibility_warning);
    CHECK(tr.start_jump < 1e-4);
    CHECK(std::abs(tr.times.back() - 5.0) < 1e-12);
}

TEST_CASE("second-order convergence on the decay problem") {
    const double e64 = decay_error(64, 3.0), e128 = decay_error(128, 3.0), e256 = decay_error(256, 3.0);
    CHECK(e64 / e128 > 3.0);
    CHECK(e128 / e256 > 3.0);
}

TEST_CASE("solution map is linear in the history") {
    std::mt19937_64 rng(5);
    const auto sys = make_dilemma_system(1.0, 1.0);
    const int m = 32;
    const auto h1 = random_history(rng, 2, m), h2 = random_history(rng, 2, m);
    const cplx a(0.7, -0.2), b(-1.3, 0.4);
    const History hc{a * h1.z + b * h2.z, a * h1.dz + b * h2.dz};
    const auto t1 = simulate(sys, h1, 4.0, m), t2 = simulate(sys, h2, 4.0, m), tc = simulate(sys, hc, 4.0, m);
    const CMatrix diff = tc.z - (a * t1.z + b * t2.z);
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-8 * (1.0 + tc.z.cwiseAbs().maxCoeff()));
}

TEST_CASE("trace of the zero trajectory is zero") {
    const auto sys = make_dilemma_system(1.0, 0.0);
    const History h{CMatrix::Zero(2, 17), CMatrix::Zero(2, 17)};
    for (const auto& [t, v] : m2_norm_trace(simulate(sys, h, 3.0, 16))) CHECK(v == 0.0);
}

TEST_CASE("constant state with no dynamics has norm sqrt2 |c|") {
    const auto sys = make_pointwise_system(CMatrix::Zero(2, 2), CMatrix::Zero(2, 2));
    CVector c(2);
    c << cplx(1.0, 2.0), cplx(-0.5, 0.0);
    History h{c.replicate(1, 33), CMatrix::Zero(2, 33)};
    const auto tr = simulate(sys, h, 3.0, 32);
    for (const auto& [t, v] : m2_norm_trace(tr)) CHECK(std::abs(v - std::sqrt(2.0) * c.norm()) < 1e-12);
}

TEST_CASE("norm of a decaying solution decreases monotonically") {
    const auto trace = m2_norm_trace(simulate(decay_system(), exp_history(128), 10.0, 128));
    REQUIRE(trace.size() == 21);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].second < trace[i - 1].second);
    const auto g = growth_verdict(trace, 3.0);
    CHECK(g.verdict == Growth::Decaying);
    CHECK(std::abs(g.log_slope + 1.0) < 0.1);
}

TEST_CASE("growth verdict on synthetic traces") {
    CHECK(growth_verdict(synthetic([](double t) { return 1.0 + 0.5 * t; }, 30.0), 5.0).verdict == Growth::Growing);
    CHECK(growth_verdict(synthetic([](double t) { return std::exp(-0.2 * t); }, 30.0), 5.0).verdict == Growth::Decaying);
    CHECK(growth_verdict(synthetic([](double t) { return 2.0 + 0.1 * std::sin(t); }, 30.0), 5.0).verdict == Growth::Bounded);
    const auto lin = growth_verdict(synthetic([](double t) { return 3.0 + 2.0 * t; }, 30.0), 5.0);
    CHECK(std::abs(lin.linear_slope - 2.0) < 1e-12);
    CHECK(std::abs(lin.linear_r2 - 1.0) < 1e-12);
    CHECK(lin.initial_norm == 3.0);
    CHECK_THROWS_AS(growth_verdict(synthetic([](double t) { return t; }, 10.0), 5.0), Error);
    try {
        growth_verdict(synthetic([](double t) { return t; }, 10.0), 5.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
}

TEST_CASE("incompatible history raises the start warning") {
    History h = exp_history(64);
    h.dz.setZero();
    const auto tr = simulate(decay_system(), h, 1.0, 64);
    CHECK(tr.compatibility_warning);
    // z'(0+) = -int z = -(e - 1) while z'(0-) = 0.
    CHECK(std::abs(tr.start_jump - (std::exp(1.0) - 1.0)) < 1e-3);
}

TEST_CASE("builtin histories have the right shape") {
    const auto sys = make_dilemma_system(1.0, 1.0);
    for (const char* name : {"trig", "exp", "rootvec"}) {
        const auto h = builtin_history(name, sys, 64);
        CHECK(h.z.rows() == 2);
        CHECK(h.grid_m() == 64);
        CHECK(h.dz.cols() == 65);
        CHECK(h.z.allFinite());
    }
    CHECK_THROWS_AS(builtin_history("nope", sys, 64), Error);
}

TEST_CASE("error paths") {
    const auto sys = decay_system();
    try {
        simulate(sys, exp_history(16), 1.0, 32);
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
    CHECK_THROWS_AS(simulate(sys, exp_history(4), 1.0, 4), Error);
    CHECK_THROWS_AS(simulate(sys, exp_history(16), -1.0, 16), Error);

    // I - (h/2) A0 - (h^2/4) A0 vanishes for A0 = 1 / (h/2 + h^2/4).
    const double h = 1.0 / 8.0;
    const auto singular = make_pointwise_system(scalar(0.0), scalar(1.0 / (0.5 * h + 0.25 * h * h)));
    try {
        simulate(singular, exp_history(8), 1.0, 8);
        FAIL("expected a singular step");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularStep);
    }
}

TEST_CASE("trajectory csv has a header and one row per kept step") {
    const auto tr = simulate(decay_system(), exp_history(16), 1.0, 16);
    std::ostringstream os;
    write_trajectory_csv(os, tr, 4);
    std::istringstream is(os.str());
    std::string line;
    int rows = 0;
    std::getline(is, line);
    CHECK(line.find('t') != std::string::npos);
    while (std::getline(is, line)) ++rows;
    CHECK(rows >= 4);
}

}
