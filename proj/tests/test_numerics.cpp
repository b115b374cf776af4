#include <catch2/catch_amalgamated.hpp>

#include "qnet/qnet.hpp"
#include "support/oracles.hpp"

using namespace qnet;

namespace {
Precision<Real> ctx50() { return make_context(50); }
}

TEST_CASE("fixed point: exponential sigma map has root rho") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const Real lambda(5), mu(2);
    const int c = 3;
    auto map = [&](const Real& s) { return lambda / (lambda + Real(c) * mu * (1 - s)); };
    Real sigma = solve_fixed_point(map, Real("0.5"), ctx);
    CHECK(abs(sigma - Real(5) / 6) < 2 * ctx.eps_sigma);
}

TEST_CASE("fixed point: contraction to zero and non-convergence") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Real zero = solve_fixed_point([](const Real& x) { return x / 2; }, Real("0.5"), ctx);
    CHECK(abs(zero) < Real("1e-30"));

    auto flip = [](const Real& x) { return 1 - x; };
    Precision<Real> tight = ctx;
    tight.fixed_point_cap = 1000;
    CHECK_THROWS_AS(solve_fixed_point(flip, Real("0.25"), tight), NonConvergence);
}

TEST_CASE("stationary vector: doubly stochastic 2x2") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    TransitionMatrix<Real> P(2);
    P(0, 0) = P(0, 1) = P(1, 0) = P(1, 1) = Real("0.5");
    for (auto method : {StationaryMethod::power_iteration, StationaryMethod::direct_solve}) {
        auto pi = solve_stationary_vector(P, ctx, method);
        CHECK(abs(pi[0] - Real("0.5")) < 10 * ctx.eps_sigma);
        CHECK(abs(pi[1] - Real("0.5")) < 10 * ctx.eps_sigma);
    }
}

TEST_CASE("stationary vector: reducible chains are rejected") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    TransitionMatrix<Real> I3(3);
    for (long i = 0; i < 3; ++i) I3(i, i) = Real(1);
    CHECK_THROWS_AS(solve_stationary_vector(I3, ctx), SingularSystem);

    // two disjoint 2-cycles
    TransitionMatrix<Real> two(4);
    two(0, 1) = two(1, 0) = two(2, 3) = two(3, 2) = Real(1);
    CHECK_THROWS_AS(solve_stationary_vector(two, ctx), SingularSystem);
}

TEST_CASE("stationary vector: power iteration and direct solve agree") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    SplitMix64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const long n = 3 + static_cast<long>(rng.next() % 6);
        TransitionMatrix<Real> P(n);
        for (long i = 0; i < n; ++i) {
            Real sum(0);
            for (long j = 0; j < n; ++j) {
                P(i, j) = Real(rng.uniform() + 0.01);
                sum += P(i, j);
            }
            for (long j = 0; j < n; ++j) P(i, j) /= sum;
        }
        auto a = solve_stationary_vector(P, ctx, StationaryMethod::power_iteration);
        auto b = solve_stationary_vector(P, ctx, StationaryMethod::direct_solve);
        for (long j = 0; j < n; ++j)
            CHECK(abs(a[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)]) <
                  Real("1e-35"));
    }
}

TEST_CASE("stationary vector of the embedded chain feeds the reference p(0)") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 3;
    m.service_rate = Real(2);
    m.interarrival = Interarrival<Real>::exponential(Real(5));
    m.buffer = BufferMode::finite;
    m.capacity = 6;
    auto P = build_matrix(m, 6, ctx);
    auto pi = solve_stationary_vector(P, ctx);
    ArrivalDistribution<Real> arr;
    arr.pi = pi;
    arr.level = 6;
    arr.normalization = Real(1);
    auto p = time_average_single(m, arr);
    CHECK(abs(p[0] - Real("0.067958810")) < Real("5e-10"));
    CHECK(abs(p[2] - Real("0.212371283")) < Real("5e-10"));
}

TEST_CASE("lu solve on a small dense system") {
    PrecisionGuard guard(50);
    Dense<Real> A(3, 3);
    A(0, 0) = 2; A(0, 1) = 1; A(0, 2) = -1;
    A(1, 0) = -3; A(1, 1) = -1; A(1, 2) = 2;
    A(2, 0) = -2; A(2, 1) = 1; A(2, 2) = 2;
    std::vector<Real> b{Real(8), Real(-11), Real(-3)};
    auto x = lu_solve(A, b);
    CHECK(abs(x[0] - 2) < Real("1e-45"));
    CHECK(abs(x[1] - 3) < Real("1e-45"));
    CHECK(abs(x[2] + 1) < Real("1e-45"));

    Dense<Real> S(2, 2);
    S(0, 0) = 1; S(0, 1) = 2;
    S(1, 0) = 2; S(1, 1) = 4;
    std::vector<Real> b2{Real(1), Real(2)};
    CHECK_THROWS_AS(lu_solve(S, b2), SingularSystem);
}

TEST_CASE("quadrature oracle agrees with the finite-sum kernel") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 3;
    m.service_rate = Real(2);
    m.interarrival = Interarrival<Real>::exponential(Real(5));
    m.buffer = BufferMode::finite;
    m.capacity = 8;

    auto q = quadrature_pij_oracle(model_cast<double>(m), 3, 1);
    double exact = static_cast<double>(transition_prob(m, 3, 1, ctx));
    CHECK(std::abs(q.value - exact) < 1e-8);
}

TEST_CASE("quadrature oracle: deterministic closed form") {
    // p(3,2) = 9 e^{-2 a mu} - 9 e^{-3 a mu} - 9 mu a e^{-3 a mu}, a=0.2, mu=2
    Model<double> m;
    m.servers = 3;
    m.service_rate = 2.0;
    m.interarrival = Interarrival<double>::deterministic(0.2);
    m.buffer = BufferMode::finite;
    m.capacity = 8;
    auto q = quadrature_pij_oracle(m, 3, 2);
    const double a = 0.2, mu = 2.0;
    const double expect = 9 * std::exp(-2 * a * mu) - 9 * std::exp(-3 * a * mu) -
                          9 * mu * a * std::exp(-3 * a * mu);
    CHECK(std::abs(q.value - expect) < 1e-9);
    CHECK(q.error_estimate <= 1e-10);
}

TEST_CASE("quadrature oracle rejects out-of-region requests") {
    Model<double> m;
    m.servers = 3;
    m.service_rate = 2.0;
    m.interarrival = Interarrival<double>::exponential(5.0);
    m.buffer = BufferMode::finite;
    m.capacity = 8;
    CHECK_THROWS_AS(quadrature_pij_oracle(m, 3, 3), ValidationError);  // j >= c
    CHECK_THROWS_AS(quadrature_pij_oracle(m, 2, 1), ValidationError);  // i < c
}
