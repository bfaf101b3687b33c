#include <doctest.h>

#include <random>

#include "nds/model.hpp"
#include "oracles.hpp"

using namespace nds;

namespace {

NeutralSystem random_system(std::mt19937_64& rng, int n, int deg2, int deg3) {
    std::vector<CMatrix> c2, c3;
    for (int j = 0; j <= deg2; ++j) c2.push_back(oracle::random_matrix(rng, n, n, 0.5));
    for (int j = 0; j <= deg3; ++j) c3.push_back(oracle::random_matrix(rng, n, n, 0.5));
    return NeutralSystem(oracle::random_matrix(rng, n, n, 0.4), MatrixPolynomial(c2), MatrixPolynomial(c3));
}

// Delta(lambda) by quadrature of the defining integrals.
CMatrix delta_oracle(const NeutralSystem& sys, cplx l) {
    const auto n = static_cast<int>(sys.n());
    CMatrix out = -l * CMatrix::Identity(n, n) + l * std::exp(-l) * sys.a_minus1();
    out += oracle::simpson_matrix(
        [&](double s) { return CMatrix(std::exp(l * s) * (l * sys.a2()(s, n) + sys.a3()(s, n))); }, n, n, -1.0, 0.0);
    return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("exp_poly_integral closed forms") {
    CHECK(std::abs(exp_poly_integral(0.0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(exp_poly_integral(1.0, 0) - (1.0 - std::exp(-1.0))) < 1e-14);
    CHECK(std::abs(exp_poly_integral(0.0, 3) - (-0.25)) < 1e-15);
}

TEST_CASE("exp_poly_integral against quadrature") {
    const cplx lambdas[] = {{2.0, 3.0}, {1e-4, 0.0}, {0.0, 1e-3}, {-5.0, 2.0}, {0.3, -40.0}, {20.0, 1.0}, {-12.0, 0.0}, {0.0, 125.0}};
    for (cplx l : lambdas) {
        for (int j = 0; j <= 16; ++j) {
            const cplx ref = oracle::simpson<cplx>([&](double s) { return std::exp(l * s) * std::pow(s, j); }, -1.0, 0.0, 1e-14);
            const double scale = std::max(1e-300, std::abs(ref));
            INFO("lambda=" << l << " j=" << j);
            CHECK(std::abs(exp_poly_integral(l, j) - ref) < 1e-11 * std::max(scale, 1e-3));
        }
    }
}

TEST_CASE("exp_poly_integral is continuous across small |lambda|") {
    for (int j = 0; j <= 8; ++j) {
        for (double r : {1e-3, 8.0}) {
            const cplx a = std::polar(r - 1e-6, 0.7), b = std::polar(r + 1e-6, 0.7);
            CHECK(std::abs(exp_poly_integral(a, j) - exp_poly_integral(b, j)) < 1e-10 * std::max(1.0, std::abs(exp_poly_integral(a, j))) + 1e-5 * std::abs(exp_poly_integral(a, j + 1)));
        }
    }
}

TEST_CASE("char_matrix examples") {
    const auto ex = make_dilemma_system(1.0, 0.0);
    const CMatrix d = char_matrix(ex, cplx(0.0, kPi));
    CHECK(std::abs(d(0, 0) - (-1.0)) < 1e-12);
    CHECK(std::abs(d(1, 1) - (-1.0)) < 1e-12);
    CHECK(std::abs(d(0, 1)) < 1e-12);

    const NeutralSystem bare(CMatrix::Zero(3, 3), MatrixPolynomial(), MatrixPolynomial());
    const cplx l(0.4, -2.0);
    CHECK((char_matrix(bare, l) + l * CMatrix::Identity(3, 3)).norm() < 1e-15);
    CHECK((char_matrix_derivative(bare, l) + CMatrix::Identity(3, 3)).norm() < 1e-15);
    CHECK((char_matrix_adjoint(bare, l) + l * CMatrix::Identity(3, 3)).norm() < 1e-15);

    CMatrix one(1, 1);
    one << 1.0;
    const NeutralSystem pure(one, MatrixPolynomial(), MatrixPolynomial());
    CHECK(std::abs(char_matrix(pure, cplx(0.0, 2.0 * kPi))(0, 0)) < 1e-13);
    CHECK(std::abs(char_matrix_derivative(pure, cplx(0.0, 2.0 * kPi))(0, 0) - cplx(0.0, -2.0 * kPi)) < 1e-12);
}

TEST_CASE("lifted pointwise term reproduces -lambda I + lambda e^-lambda A_{-1} + A0") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    const CMatrix am1 = oracle::random_matrix(rng, 2, 2, 0.5);
    CMatrix a0(2, 2);
    a0 << -1.0, 1.0, 0.0, -1.0;
    const auto [a2, a3] = lift_pointwise_delay(a0);
    REQUIRE(a2.coefficients().size() == 2);
    REQUIRE(a3.coefficients().size() == 1);
    CHECK((a2.coefficients()[0] - a0).norm() == 0.0);
    CHECK((a2.coefficients()[1] - a0).norm() == 0.0);
    CHECK((a3.coefficients()[0] - a0).norm() == 0.0);
    const auto sys = make_pointwise_system(am1, a0);
    for (int t = 0; t < 20; ++t) {
        const cplx l(u(rng), 5.0 * u(rng));
        const CMatrix expect = -l * CMatrix::Identity(2, 2) + l * std::exp(-l) * am1 + a0;
        CHECK((char_matrix(sys, l) - expect).norm() < 1e-10 * std::max(1.0, expect.norm()));
    }
    const auto [z2, z3] = lift_pointwise_delay(CMatrix::Zero(2, 2));
    CHECK(z2(-0.3, 2).norm() == 0.0);
    CHECK(z3(-0.3, 2).norm() == 0.0);
}

TEST_CASE("char_matrix agrees with quadrature for random polynomial kernels") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const auto sys = random_system(rng, 2, trial % 4, (trial + 2) % 5);
        const cplx l(3.0 * u(rng), 20.0 * u(rng));
        const CMatrix ref = delta_oracle(sys, l);
        CHECK((char_matrix(sys, l) - ref).norm() < 1e-9 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("property: (Delta(lambda))^H = Delta*(conj lambda)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sys = random_system(rng, 1 + trial % 3, trial % 3, trial % 2);
        const cplx l(4.0 * u(rng), 30.0 * u(rng));
        const CMatrix lhs = char_matrix(sys, l).adjoint();
        CHECK((lhs - char_matrix_adjoint(sys, std::conj(l))).norm() < 1e-12 * std::max(1.0, lhs.norm()));
    }
    const auto ex = make_dilemma_system(1.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        const cplx l(-1e-3, kPi * (2 * k + 1));
        CHECK(std::abs(char_det(ex.adjoint(), std::conj(l)) - std::conj(char_det(ex, l))) < 1e-12 * std::max(1.0, std::abs(char_det(ex, l))));
    }
}

TEST_CASE("property: derivative matches central differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto sys = random_system(rng, 2, 2, 1);
    for (int trial = 0; trial < 50; ++trial) {
        cplx l(u(rng), u(rng));
        l *= 50.0 * std::abs(u(rng)) / std::max(1e-9, std::abs(l));
        const double h = 1e-6;
        const CMatrix fd = (char_matrix(sys, l + h) - char_matrix(sys, l - h)) / (2.0 * h);
        const CMatrix an = char_matrix_derivative(sys, l);
        CHECK((fd - an).norm() < 1e-6 * std::max(1.0, an.norm()));
    }
}

TEST_CASE("char_det matches the determinant") {
    std::mt19937_64 rng(9);
    for (int n = 1; n <= 4; ++n) {
        const auto sys = random_system(rng, n, 1, 1);
        const cplx l(-0.5, 7.0);
        const cplx ref = char_matrix(sys, l).determinant();
        CHECK(std::abs(char_det(sys, l) - ref) < 1e-10 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("d_vector trivial cases") {
    const auto sys = make_dilemma_system(1.0, 1.0);
    StateSegment g(2, 64);
    g.y << cplx(1.0, 2.0), cplx(-3.0, 0.5);
    CHECK((d_vector(sys, g, cplx(0.3, 1.0)) - g.y).norm() < 1e-15);

    CMatrix am1(2, 2);
    am1 << 0.5, 0.2, -0.1, 0.3;
    const NeutralSystem only_delay(am1, MatrixPolynomial(), MatrixPolynomial());
    StateSegment c(2, 256);
    const CVector cv = (CVector(2) << 1.0, cplx(0.0, 1.0)).finished();
    for (int i = 0; i <= 256; ++i) c.z.col(i) = cv;
    const CVector expect = std::exp(-1.0) * (std::exp(1.0) - 1.0) * (am1 * cv);
    CHECK((d_vector(only_delay, c, 1.0) - expect).norm() < 1e-10);
}

TEST_CASE("d_vector against nested quadrature and grid refinement") {
    const auto sys = make_dilemma_system(1.0, 1.0);
    auto xi = [](double t) {
        CVector v(2);
        v << cplx(std::cos(2.0 * t), t * t), cplx(1.0 + t, std::sin(3.0 * t));
        return v;
    };
    const CVector y0 = (CVector(2) << 0.2, cplx(0.0, -1.0)).finished();
    auto segment = [&](int m) {
        StateSegment g(2, m);
        g.y = y0;
        for (int i = 0; i <= m; ++i) g.z.col(i) = xi(g.theta(i));
        return g;
    };
    const cplx l(0.7, 2.0);
    // D = y + l e^-l A_{-1} int e^{-l s} xi - int A2 xi - int e^{l t}(l A2 + A3) int_0^t e^{-l s} xi ds dt
    auto inner = [&](double t, int c) {
        return oracle::simpson<cplx>([&](double s) { return std::exp(-l * s) * xi(s)(c); }, 0.0, t, 1e-13);
    };
    CVector ref = y0;
    for (int c = 0; c < 2; ++c) {
        const cplx whole = oracle::simpson<cplx>([&](double s) { return std::exp(-l * s) * xi(s)(c); }, -1.0, 0.0, 1e-13);
        ref += (l * std::exp(-l) * sys.a_minus1().col(c)) * whole;
    }
    for (int r = 0; r < 2; ++r) {
        ref(r) -= oracle::simpson<cplx>(
            [&](double t) {
                const CMatrix a2 = sys.a2()(t, 2), a3 = sys.a3()(t, 2);
                cplx acc = (a2.row(r) * xi(t))(0);
                const CMatrix k = std::exp(l * t) * (l * a2 + a3);
                for (int c = 0; c < 2; ++c) acc += k(r, c) * inner(t, c);
                return acc;
            },
            -1.0, 0.0, 1e-10);
    }
    const CVector coarse = d_vector(sys, segment(256), l);
    const CVector fine = d_vector(sys, segment(1024), l);
    CHECK((coarse - ref).norm() < 1e-6 * ref.norm());
    CHECK((coarse - fine).norm() < 1e-3 * fine.norm());
}

TEST_CASE("property: d_vector is linear") {
    std::mt19937_64 rng(21);
    const auto sys = random_system(rng, 2, 2, 1);
    for (int trial = 0; trial < 10; ++trial) {
        StateSegment a(oracle::random_matrix(rng, 2, 1).col(0), oracle::random_matrix(rng, 2, 33));
        StateSegment b(oracle::random_matrix(rng, 2, 1).col(0), oracle::random_matrix(rng, 2, 33));
        const cplx al(0.3, -1.2), be(-2.0, 0.4), l(0.5, 3.0 * trial);
        const CVector lhs = d_vector(sys, al * a + be * b, l);
        const CVector rhs = al * d_vector(sys, a, l) + be * d_vector(sys, b, l);
        CHECK((lhs - rhs).norm() < 1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(NeutralSystem(CMatrix::Zero(2, 3), MatrixPolynomial(), MatrixPolynomial()), Error);
    CHECK_THROWS_AS(NeutralSystem(CMatrix::Zero(0, 0), MatrixPolynomial(), MatrixPolynomial()), Error);
    std::vector<CMatrix> too_many(10, CMatrix::Identity(2, 2));
    CHECK_THROWS_AS(NeutralSystem(CMatrix::Identity(2, 2), MatrixPolynomial(too_many), MatrixPolynomial()), Error);
    CHECK_THROWS_AS(NeutralSystem(CMatrix::Identity(2, 2), MatrixPolynomial({CMatrix::Identity(3, 3)}), MatrixPolynomial()), Error);
    CHECK_THROWS_AS(NeutralSystem(CMatrix::Identity(2, 2), MatrixPolynomial(), MatrixPolynomial(), CMatrix::Ones(3, 1)), Error);
    CMatrix bad = CMatrix::Identity(2, 2);
    bad(0, 1) = cplx(std::nan(""), 0.0);
    CHECK_THROWS_AS(NeutralSystem(bad, MatrixPolynomial(), MatrixPolynomial()), Error);
    CHECK_THROWS_AS(StateSegment(2, 4), Error);
    const auto sys = make_dilemma_system(1.0, 0.0);
    CHECK_THROWS_AS(d_vector(sys, StateSegment(3, 16), 1.0), Error);
}

}  // TEST_SUITE
