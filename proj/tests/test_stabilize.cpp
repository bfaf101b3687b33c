#include <doctest.h>

#include <random>
#include <sstream>

#include "nds/stabilize.hpp"
#include "nds/system_io.hpp"
#include "oracles.hpp"

using namespace nds;

namespace {

std::string fixture(const std::string& name) { return std::string(NDS_FIXTURE_DIR) + "/" + name; }

CMatrix col2(cplx a, cplx b) {
    CMatrix m(2, 1);
    m << a, b;
    return m;
}

SpectralWindow window(double im_max) {
    SpectralWindow w;
    w.re_min = -3.0;
    w.re_max = 1.0;
    w.im_min = -im_max;
    w.im_max = im_max;
    return w;
}

// Characteristic matrix of z' = -z'(t-1) + [[-b, s], [0, -b]] z written out directly.
oracle::CMat dilemma_delta(double b, double s, cplx l) {
    oracle::CMat d(2, 2);
    const cplx diag = -l - l * std::exp(-l) - b;
    d << diag, s, 0.0, diag;
    return d;
}

oracle::CMat hstack(const oracle::CMat& a, const oracle::CMat& b) {
    oracle::CMat m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
}

}  // namespace

TEST_SUITE("stabilize") {

TEST_CASE("condition 4 examples") {
    const CMatrix minus_i = -CMatrix::Identity(2, 2);
    auto r = check_condition4(minus_i, CMatrix::Identity(2, 2));
    REQUIRE(r.size() == 1);
    CHECK(r[0].rank == 2);
    CHECK(r[0].pass);

    r = check_condition4(minus_i, col2(1.0, 0.0));
    REQUIRE(r.size() == 1);
    CHECK(r[0].rank == 1);
    CHECK_FALSE(r[0].pass);

    CMatrix a(2, 2);
    a << -1.0, 0.0, 0.0, 0.5;
    r = check_condition4(a, col2(1.0, 1.0));
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r[0].mu + 1.0) < 1e-12);
    CHECK(r[0].rank == 2);
    CHECK(r[0].pass);

    CHECK(check_condition4(0.5 * CMatrix::Identity(2, 2), col2(0.0, 0.0)).empty());
}

TEST_CASE("condition 3 against an elimination oracle") {
    const double big_cut = 1e9;
    for (const auto& bcol : {col2(1.0, 0.0), col2(0.0, 1.0), col2(0.3, -0.7)}) {
        const auto sys = make_dilemma_system(1.0, 1.0).with_input(bcol);
        const auto roots = locate_window_roots(sys, window(30.0));
        REQUIRE(!roots.empty());
        const auto checks = check_condition3(sys, roots, big_cut, -10.0);
        REQUIRE(checks.size() == roots.size());
        for (const auto& c : checks) {
            const int rank = oracle::gauss_rank(hstack(dilemma_delta(1.0, 1.0, c.root.lambda), bcol), 1e-6);
            CHECK(c.rank == rank);
            CHECK(c.pass == (rank == 2));
            CHECK_FALSE(c.via_condition4);
        }
        // Im Delta = span(e1), so only a B with a nonzero second entry passes.
        const bool expect = std::abs(bcol(1, 0)) > 0.0;
        for (const auto& c : checks) CHECK(c.pass == expect);
    }
}

TEST_CASE("condition 3 edge cases") {
    const auto sys = make_dilemma_system(1.0, 1.0).with_input(col2(0.0, 0.0));
    const auto roots = locate_window_roots(sys, window(20.0));
    for (const auto& c : check_condition3(sys, roots, 1e9, -10.0)) CHECK_FALSE(c.pass);
    // Every root is in the open left half-plane: nothing to check.
    CHECK(check_condition3(make_dilemma_system(1.0, 1.0).with_input(col2(1.0, 0.0)), roots).empty());
}

TEST_CASE("ranks are invariant under scaling of B") {
    const auto base = make_dilemma_system(1.0, 1.0);
    const auto roots = locate_window_roots(base, window(20.0));
    CMatrix a(2, 2);
    a << -1.0, 0.0, 0.0, 0.5;
    for (double scale : {1e-3, 1.0, 1e3}) {
        for (const auto& bcol : {col2(1.0, 0.0), col2(0.0, 1.0)}) {
            const auto ref = check_condition3(base.with_input(bcol), roots, 1e9, -10.0);
            const auto scaled = check_condition3(base.with_input(scale * bcol), roots, 1e9, -10.0);
            REQUIRE(ref.size() == scaled.size());
            for (std::size_t i = 0; i < ref.size(); ++i) CHECK(ref[i].rank == scaled[i].rank);
        }
        CHECK(check_condition4(a, scale * col2(1.0, 1.0))[0].rank == 2);
        CHECK(check_condition4(-CMatrix::Identity(2, 2), scale * col2(1.0, 0.0))[0].rank == 1);
    }
}

TEST_CASE("high-frequency lattice roots go through condition 4") {
    const auto sys = make_dilemma_system(1.0, 1.0).with_input(col2(0.0, 1.0));
    const auto roots = locate_window_roots(sys, window(30.0));
    const auto checks = check_condition3(sys, roots, 10.0, -10.0);
    bool any = false;
    for (const auto& c : checks) {
        if (std::abs(c.root.lambda.imag()) > 10.0 && c.root.lattice) {
            any = true;
            CHECK(c.via_condition4);
            CHECK_FALSE(c.pass);
        }
    }
    CHECK(any);
}

TEST_CASE("scalarization examples") {
    const auto pass_sys = load_system(fixture("stab_pass.sys"));
    const auto one = scalarize_input(pass_sys, pass_sys.b(), {});
    CHECK(one.draws == 1);
    CHECK(std::abs(one.c(0) - 1.0) < 1e-15);

    const auto minus_i = make_pointwise_system(-CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2));
    CHECK_THROWS_AS(scalarize_input(minus_i, col2(1.0, 0.0), {}), Error);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = scalarize_input(minus_i, CMatrix::Identity(2, 2), {}, seed);
        CHECK(s.draws > 1);
        // Left eigenvectors of -I are all of C^2: both components must be clearly nonzero.
        CHECK(std::abs(s.b(0)) > 1e-6 * s.b.norm());
        CHECK(std::abs(s.b(1)) > 1e-6 * s.b.norm());
        CHECK((s.b - CMatrix::Identity(2, 2) * s.c).norm() < 1e-14);
        CHECK(s.worst_margin >= 1.0);
    }

    CMatrix twin(2, 2);
    twin << 1.0, 1.0, 2.0, 2.0;
    const auto t = scalarize_input(minus_i, twin, {}, 3);
    CHECK(std::abs(t.b(0)) > 0.0);
    CHECK(std::abs(t.b(1) - 2.0 * t.b(0)) < 1e-12 * t.b.norm());

    CMatrix twin_bad(2, 2);
    twin_bad << 1.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(scalarize_input(minus_i, twin_bad, {}, 3), Error);
}

TEST_CASE("scalarization is reproducible for a fixed seed") {
    const auto minus_i = make_pointwise_system(-CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2));
    const auto a = scalarize_input(minus_i, CMatrix::Identity(2, 2), {}, 42);
    const auto b = scalarize_input(minus_i, CMatrix::Identity(2, 2), {}, 42);
    CHECK(a.draws == b.draws);
    CHECK((a.c - b.c).norm() == 0.0);
}

TEST_CASE("pairing asymptotics") {
    CVector e1(2);
    e1 << 1.0, 0.0;
    // Pure neutral part: the normalized pairing tends to 1 / (2 pi).
    const auto pure = make_pointwise_system(-CMatrix::Identity(2, 2), CMatrix::Zero(2, 2));
    const auto p = pairing_asymptotics_check(pure, e1, 20, 200);
    CHECK(p.evidence);
    REQUIRE(!p.samples.empty());
    CHECK(std::abs(p.samples.back().value - 1.0 / (2.0 * oracle::pi)) < 1e-2 / (2.0 * oracle::pi));
    for (const auto& s : p.samples) CHECK(std::abs(s.lambda.real()) < 1e-9);

    const auto zero = pairing_asymptotics_check(make_dilemma_system(1.0, 0.0), CVector::Zero(2), 20, 200);
    CHECK_FALSE(zero.evidence);
    for (const auto& s : zero.samples) CHECK(s.value == 0.0);

    const auto ex = pairing_asymptotics_check(make_dilemma_system(1.0, 0.0), e1, 20, 200);
    CHECK(ex.evidence);
}

TEST_CASE("assignment targets") {
    std::vector<TargetInput> in{{1, 3, cplx(0.0, 7.0 * kPi), 0.1}, {1, 4, cplx(0.0, 9.0 * kPi), 0.0}};
    const auto t = assignment_targets(in, 0.5);
    REQUIRE(t.accepted.size() == 1);
    REQUIRE(t.rejected.size() == 1);
    CHECK(std::abs(t.accepted[0].target - cplx(-0.05, 7.0 * kPi)) < 1e-15);
    CHECK(t.rejected[0].k == 4);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TargetInput> random;
    for (int k = 0; k < 200; ++k) random.push_back({1, k, cplx(-0.2 * u(rng), 10.0 * u(rng)), 0.3 * u(rng)});
    const auto rt = assignment_targets(random, 0.5);
    CHECK(rt.accepted.size() + rt.rejected.size() == random.size());
    for (const auto& a : rt.accepted) {
        CHECK(a.target.real() < 0.0);
        CHECK(a.target.real() <= a.lambda.real());
        CHECK(std::abs(a.target.imag() - a.lambda.imag()) < 1e-15);
    }

    // Measured lattice radii of the example: every target is feasible.
    const auto sys = make_dilemma_system(1.0, 0.0);
    const auto lattice = target_inputs(lattice_roots(sys, 0, 20));
    const auto et = assignment_targets(lattice, 0.5);
    CHECK(et.rejected.empty());
    CHECK(!et.accepted.empty());
}

TEST_CASE("modal placement") {
    CVector eigs(1), beta(1), targets(1);
    eigs << 0.5;
    beta << 1.0;
    targets << -1.0;
    const auto k = place_modal(eigs, beta, targets);
    CHECK(std::abs(k(0) - 1.5) < 1e-14);

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        CVector e2(2), b2(2), t2(2);
        e2 << 0.3, 0.7;
        b2 = oracle::random_matrix(rng, 2, 1);
        t2 << -0.5, -0.6;
        const auto k2 = place_modal(e2, b2, t2);
        oracle::CMat closed = e2.asDiagonal();
        closed -= b2 * k2.transpose();
        auto [l1, l2] = oracle::eig2(closed);
        if (l1.real() > l2.real()) std::swap(l1, l2);
        CHECK(std::abs(l1 - cplx(-0.6)) < 1e-9);
        CHECK(std::abs(l2 - cplx(-0.5)) < 1e-9);
    }

    const auto pass_sys = load_system(fixture("stab_pass.sys"));
    const auto empty = finite_pole_placement(pass_sys, {}, pass_sys.b(), CVector());
    CHECK(empty.gain.size() == 0);
}

TEST_CASE("finite placement on a system with two unstable roots") {
    const auto sys = load_system(fixture("stab_unstable_finite.sys"));
    const auto roots = locate_window_roots(sys, window(10.0));
    std::vector<RootRecord> unstable;
    for (const auto& r : roots) {
        if (r.lambda.real() > 0.0) unstable.push_back(r);
    }
    REQUIRE(unstable.size() == 2);
    CVector targets(2);
    for (std::size_t i = 0; i < 2; ++i) targets(static_cast<Eigen::Index>(i)) = std::abs(unstable[i].lambda - 0.3) < 1e-6 ? -0.5 : -0.6;
    const auto pl = finite_pole_placement(sys, unstable, sys.b(), targets);
    CHECK(pl.gain.rows() == 1);
    CHECK(pl.gain.cols() == 2);
    CHECK(pl.max_deviation <= 1e-6);
    oracle::CMat closed(2, 2);
    closed.setZero();
    for (int i = 0; i < 2; ++i) closed(i, i) = unstable[static_cast<std::size_t>(i)].lambda;
    closed -= pl.beta * pl.modal_gain.transpose();
    auto [l1, l2] = oracle::eig2(closed);
    if (l1.real() > l2.real()) std::swap(l1, l2);
    CHECK(std::abs(l1 + 0.6) < 1e-6);
    CHECK(std::abs(l2 + 0.5) < 1e-6);
}

TEST_CASE("stabilizability reports for the fixtures") {
    const auto w = window(40.0 * kPi);
    const auto pass = stabilizability_report(load_system(fixture("stab_pass.sys")), w);
    CHECK(pass.pass);
    CHECK(pass.cond1);
    CHECK(pass.cond2);

    const auto fail = stabilizability_report(load_system(fixture("stab_fail.sys")), w);
    CHECK_FALSE(fail.pass);

    const auto full = stabilizability_report(load_system(fixture("stab_full_input.sys")), w);
    CHECK_FALSE(full.pass);
    CHECK_FALSE(full.cond2);
    for (const auto& c : full.cond4) CHECK(c.pass);

    const auto finite = stabilizability_report(load_system(fixture("stab_unstable_finite.sys")), w);
    CHECK(finite.pass);
    CHECK(finite.lambda2.size() == 2);
    REQUIRE(finite.finite_gain.has_value());
    CHECK(finite.finite_gain->max_deviation <= 1e-6);

    std::ostringstream os;
    write_report(os, finite);
    CHECK(os.str().find("Stabilizable") != std::string::npos);
    std::ostringstream gs;
    write_gain_csv(gs, finite.finite_gain->gain);
    CHECK(!gs.str().empty());
}

}
