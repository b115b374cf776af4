#include <catch2/catch_amalgamated.hpp>

#include "qnet/qnet.hpp"
#include "support/oracles.hpp"

using namespace qnet;

namespace {

Precision<Real> ctx50() { return make_context(50); }

Model<Real> small_scale(Interarrival<Real> law, long N = 6) {
    Model<Real> m;
    m.servers = 3;
    m.service_rate = Real(2);
    m.interarrival = std::move(law);
    m.buffer = BufferMode::finite;
    m.capacity = N;
    return m;
}

std::vector<Interarrival<Real>> four_laws() {
    return {Interarrival<Real>::deterministic(Real(1) / 5), Interarrival<Real>::exponential(Real(5)),
            Interarrival<Real>::erlang(2, Real(5)),
            Interarrival<Real>::hyperexponential({Real("0.8"), Real("0.2")}, {Real(8), Real(2)})};
}

// hand-expanded region-3 entries for c = 3 (see the 7x7 example matrix)
Real c3_entry(const Interarrival<Real>& d, const Real& mu, long i, long j) {
    auto A = [&](int k) { return lst(d, Real(k) * mu); };
    auto An = [&](int n) { return lst_derivative(d, n, 3 * mu); };
    if (i == 3 && j == 1)
        return Real(9) / 2 * A(1) - 18 * A(2) + Real(27) / 2 * A(3) + 9 * mu * An(1);
    if (i == 3 && j == 2) return 9 * A(2) - 9 * A(3) - 9 * mu * An(1);
    if (i == 4 && j == 1)
        return Real(27) / 4 * A(1) - 54 * A(2) + Real(189) / 4 * A(3) + Real(81) / 2 * mu * An(1) +
               Real(27) / 2 * mu * mu * An(2);
    if (i == 4 && j == 2)
        return 27 * A(2) - 27 * A(3) - 27 * mu * An(1) - Real(27) / 2 * mu * mu * An(2);
    if (i == 5 && j == 1)
        return Real(81) / 8 * A(1) - 162 * A(2) + Real(1215) / 8 * A(3) +
               Real(567) / 4 * mu * An(1) + Real(243) / 4 * mu * mu * An(2) +
               Real(27) / 2 * mu * mu * mu * An(3);
    if (i == 5 && j == 2)
        return 81 * A(2) - 81 * A(3) - 81 * mu * An(1) - Real(81) / 2 * mu * mu * An(2) -
               Real(27) / 2 * mu * mu * mu * An(3);
    FAIL("no hand-expanded entry");
    return Real(0);
}

}  // namespace

TEST_CASE("transition probabilities: boundary entries") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    auto m = small_scale(Interarrival<Real>::exponential(Real(5)));

    // p(0,1) = A*(mu) = 5/7 for exponential(5), mu = 2
    CHECK(abs(transition_prob(m, 0, 1, ctx) - Real(5) / 7) < Real("1e-45"));

    // region 4: one past the reachable level
    CHECK(transition_prob(m, 2, 4, ctx) == 0);
    CHECK(transition_prob(m, 0, 5, ctx) == 0);

    // region 2: p(5,3) = (3 mu)^3 A_3*(3 mu) / 3!
    Real expect = detail::ipow(Real(6), 3) * lst_derivative(m.interarrival, 3, Real(6)) / 6;
    CHECK(abs(transition_prob(m, 5, 3, ctx) - expect) < Real("1e-45"));
}

TEST_CASE("region-3 entries match the hand-expanded c=3 forms for every law") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const Real tol = digits_tolerance(ctx.digits, 15);
    for (auto& law : four_laws()) {
        auto m = small_scale(law);
        for (long i : {3L, 4L, 5L})
            for (long j : {1L, 2L}) {
                Real got = transition_prob(m, i, j, ctx);
                Real expect = c3_entry(law, Real(2), i, j);
                CAPTURE(law_name(law.law), i, j);
                CHECK(abs(got - expect) < tol);
            }
    }
}

TEST_CASE("coefficient arrangements agree and assemble the same probabilities") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const Real tol = digits_tolerance(ctx.digits, 15);
    for (int c : {2, 3, 5, 8}) {
        for (int j = 1; j <= c - 1; ++j)
            for (int k = 1; k <= c - j; ++k)
                for (long i = c; i <= c + 5; ++i) {
                    Real f1 = oracles::coeff_factorial_form<Real>(c, j, k, i);
                    Real f2 = oracles::coeff_product_form<Real>(c, j, k, i);
                    Real f3 = oracles::coeff_step_form<Real>(c, j, k, i);
                    Real scale = std::max(Real(1), abs(f1));
                    CHECK(abs(f1 - f2) < tol * scale);
                    CHECK(abs(f1 - f3) < tol * scale);
                }
        // assembled probabilities, subtraction oracle vs tail-form kernel
        Model<Real> m;
        m.servers = c;
        m.service_rate = Real(2);
        m.interarrival = Interarrival<Real>::erlang(2, Real(5));
        m.buffer = BufferMode::finite;
        m.capacity = c + 6;
        for (int j = 1; j <= c - 1; ++j)
            for (long i = c; i <= c + 5; ++i) {
                Real kernel_val = transition_prob(m, i, j, ctx);
                Real oracle_val = oracles::region3_subtraction_form(
                    m.interarrival, c, m.service_rate, i, j,
                    oracles::coeff_factorial_form<Real>);
                CHECK(abs(kernel_val - oracle_val) < tol);
            }
    }
}

TEST_CASE("build_matrix: one server, capacity one") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 1;
    m.service_rate = Real(2);
    m.interarrival = Interarrival<Real>::exponential(Real(5));
    m.buffer = BufferMode::finite;
    m.capacity = 1;
    auto P = build_matrix(m, 1, ctx);
    const Real a_mu = Real(5) / 7;  // A*(mu)
    CHECK(abs(P(0, 0) - (1 - a_mu)) < Real("1e-45"));
    CHECK(abs(P(0, 1) - a_mu) < Real("1e-45"));
    CHECK(P(1, 0) == P(0, 0));
    CHECK(P(1, 1) == P(0, 1));
}

TEST_CASE("build_matrix: structure and row sums for every law") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const Real tol = digits_tolerance(ctx.digits, 10);
    for (auto& law : four_laws()) {
        auto m = small_scale(law, 9);
        auto P = build_matrix(m, 9, ctx);
        CHECK(P.max_row_sum_error() < tol);
        for (long i = 0; i <= 9; ++i)
            for (long j = 0; j <= 9; ++j) {
                CHECK(P(i, j) >= 0);
                CHECK(P(i, j) <= 1);
                if (i < 9 && j > i + 1) CHECK(P(i, j) == 0);
            }
        for (long j = 0; j <= 9; ++j) CHECK(P(9, j) == P(8, j));
    }
}

TEST_CASE("build_matrix: deterministic entry example") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    auto m = small_scale(Interarrival<Real>::deterministic(Real("0.2")));
    auto P = build_matrix(m, 6, ctx);
    CHECK(abs(P(0, 1) - exp(Real("-0.4"))) < Real("1e-45"));  // e^{-a mu}
}

TEST_CASE("cut sums") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    auto m = small_scale(Interarrival<Real>::exponential(Real(5)));
    auto P = build_matrix(m, 6, ctx);
    auto a = cut_sums(P);
    for (long k = 0; k <= 6; ++k) {
        CHECK(a[k][0] == P(k, 0));
        CHECK(abs(a[k][6] - 1) < digits_tolerance(ctx.digits, 10));
    }
    // a(3,1) = p(3,0) + p(3,1) with the hand-expanded p(3,1)
    Real p31 = c3_entry(m.interarrival, Real(2), 3, 1);
    CHECK(abs(a[3][1] - (P(3, 0) + p31)) < digits_tolerance(ctx.digits, 15));
}

TEST_CASE("batch transform: unit batches reproduce the single kernel") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const long N = 6;
    auto m = small_scale(Interarrival<Real>::erlang(2, Real(5)), N);
    auto base = single_arrival_rows(m, N, N + 1, ctx);
    auto P = build_matrix(m, N, ctx);
    auto unit = Batch<Real>::unit();
    for (auto policy : {Rejection::partial, Rejection::full}) {
        auto Pstar = batch_transform(base, N, unit, BufferMode::finite, policy);
        for (long i = 0; i <= N; ++i)
            for (long j = 0; j <= N; ++j) CHECK(abs(Pstar(i, j) - P(i, j)) < Real("1e-45"));
    }
    auto Pinf = batch_transform(base, N, unit, BufferMode::infinite, Rejection::none);
    for (long i = 0; i <= N; ++i)
        for (long j = 0; j <= N; ++j) CHECK(abs(Pinf(i, j) - P(i, j)) < Real("1e-45"));
}

TEST_CASE("batch transform: boundary rows") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const long N = 6;
    auto m = small_scale(Interarrival<Real>::exponential(Real(5)), N);
    auto base = single_arrival_rows(m, N, N + 1, ctx);
    auto geo = Batch<Real>::geometric(Real("0.5"), N + 1, ctx50().eps_trunc);

    // partial rejection from N-1: every batch fills the one free slot
    auto Pp = batch_transform(base, N, geo, BufferMode::finite, Rejection::partial);
    for (long j = 0; j <= N; ++j)
        CHECK(abs(Pp(N - 1, j) - base[N - 1][static_cast<std::size_t>(j)]) < Real("1e-45"));

    // full rejection from N: everything is dropped, the system stays full
    auto Pf = batch_transform(base, N, geo, BufferMode::finite, Rejection::full);
    for (long j = 0; j <= N; ++j)
        CHECK(abs(Pf(N, j) - base[N - 1][static_cast<std::size_t>(j)]) < Real("1e-45"));

    const Real tol = digits_tolerance(ctx.digits, 10);
    CHECK(Pp.max_row_sum_error() < tol);
    CHECK(Pf.max_row_sum_error() < tol);
}

TEST_CASE("batch transform: upward jumps bounded by the largest batch") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const long N = 8;
    auto m = small_scale(Interarrival<Real>::exponential(Real(5)), N);
    auto base = single_arrival_rows(m, N, N + 1, ctx);
    auto two = Batch<Real>::from_pmf({Real("0.5"), Real("0.5")});  // sizes 1 and 2
    for (auto policy : {Rejection::partial, Rejection::full}) {
        auto P = batch_transform(base, N, two, BufferMode::finite, policy);
        for (long i = 0; i <= N; ++i)
            for (long j = std::min(i + 2, N) + 1; j <= N; ++j) CHECK(P(i, j) == 0);
        CHECK(P.max_row_sum_error() < digits_tolerance(ctx.digits, 10));
    }
}

TEST_CASE("batch transform: policy guards") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const long N = 4;
    auto m = small_scale(Interarrival<Real>::exponential(Real(5)), N);
    auto base = single_arrival_rows(m, N, N + 1, ctx);
    auto unit = Batch<Real>::unit();
    CHECK_THROWS_AS(batch_transform(base, N, unit, BufferMode::infinite, Rejection::partial),
                    PolicyError);
    CHECK_THROWS_AS(batch_transform(base, N, unit, BufferMode::finite, Rejection::none),
                    PolicyError);
    // explicit pmf with tail mass but unresolved support
    auto short_pmf = Batch<Real>::from_pmf({Real("0.5"), Real("0.25")}, Real("0.25"));
    CHECK_THROWS_AS(batch_transform(base, N, short_pmf, BufferMode::finite, Rejection::partial),
                    ValidationError);
}
