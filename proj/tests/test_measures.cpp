#include <catch2/catch_amalgamated.hpp>

#include "qnet/qnet.hpp"
#include "support/oracles.hpp"

using namespace qnet;

namespace {

Precision<Real> ctx50() { return make_context(50); }

Model<Real> small_scale(Interarrival<Real> law, FiniteMethod fm = FiniteMethod::exact) {
    Model<Real> m;
    m.servers = 3;
    m.service_rate = Real(2);
    m.interarrival = std::move(law);
    m.buffer = BufferMode::finite;
    m.capacity = 6;
    m.finite_method = fm;
    return m;
}

const std::vector<std::vector<const char*>> kSmallScaleTables = {
    // exponential
    {"0.067958810", "0.169897026", "0.212371283", "0.176976069", "0.147480057", "0.122900048",
     "0.102416707"},
    // deterministic
    {"0.047234853", "0.127764093", "0.254669333", "0.232414603", "0.156638062", "0.107500964",
     "0.073778091"},
    // erlang-2
    {"0.060394802", "0.153533580", "0.228194616", "0.196990341", "0.150739248", "0.117912665",
     "0.092234748"},
    // hyperexponential
    {"0.095667547", "0.170777140", "0.182173364", "0.153721590", "0.148862427", "0.131909935",
     "0.116887997"},
};

Interarrival<Real> law_by_index(int idx) {
    switch (idx) {
        case 0: return Interarrival<Real>::exponential(Real(5));
        case 1: return Interarrival<Real>::deterministic(Real("0.2"));
        case 2: return Interarrival<Real>::erlang(2, Real(5));
        default:
            return Interarrival<Real>::hyperexponential({Real("0.8"), Real("0.2")},
                                                        {Real(8), Real(2)});
    }
}

}  // namespace

TEST_CASE("small-scale reference columns via geometric-tail seeding") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    for (int idx = 0; idx < 4; ++idx) {
        auto m = small_scale(law_by_index(idx), FiniteMethod::geometric_tail);
        auto arr = arrival_distribution_single(m, ctx);
        auto p = time_average_single(m, arr);
        for (int n = 0; n <= 6; ++n) {
            CAPTURE(idx, n);
            CHECK(abs(p[static_cast<std::size_t>(n)] - Real(kSmallScaleTables[idx][n])) <
                  Real("5e-10"));
        }
    }
}

TEST_CASE("exponential small scale equals the birth-death closed form in both modes") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    auto closed = oracles::mmcn_time_average(Real(5), Real(2), 3, 6);
    for (auto fm : {FiniteMethod::exact, FiniteMethod::geometric_tail}) {
        auto m = small_scale(Interarrival<Real>::exponential(Real(5)), fm);
        auto arr = arrival_distribution_single(m, ctx);
        auto p = time_average_single(m, arr);
        for (int n = 0; n <= 6; ++n) CHECK(abs(p[static_cast<std::size_t>(n)] - closed[n]) < Real("1e-20"));
    }
}

TEST_CASE("performance measures on the small-scale models") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const std::vector<std::pair<const char*, const char*>> lw = {
        {"2.944488506", "0.656092538"},
        {"2.941072182", "0.635068584"},
        {"2.946822639", "0.649247728"},
        {"2.952616004", "0.668684379"},
    };
    for (int idx = 0; idx < 4; ++idx) {
        auto m = small_scale(law_by_index(idx), FiniteMethod::geometric_tail);
        auto arr = arrival_distribution_single(m, ctx);
        auto p = time_average_single(m, arr);
        auto rep = performance(m, p, arr);
        CAPTURE(idx);
        CHECK(abs(rep.L - Real(lw[static_cast<std::size_t>(idx)].first)) < Real("5e-9"));
        CHECK(abs(rep.W - Real(lw[static_cast<std::size_t>(idx)].second)) < Real("5e-9"));
        // Little's law under the reported convention holds by construction
        CHECK(abs(rep.L - rep.lambda_eff * rep.W) < digits_tolerance(ctx.digits, 12));
        // hyperexponential ratio spot check: L/W = 5 (1 - p(6))
        if (idx == 3)
            CHECK(abs(rep.L / rep.W - 5 * (1 - Real("0.116887997"))) < Real("1e-6"));
    }
}

TEST_CASE("rate conservation: lambda pi(n) = min(n+1,c) mu p(n+1)") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    const Real tol = digits_tolerance(ctx.digits, 12);
    for (int idx = 0; idx < 4; ++idx) {
        auto m = small_scale(law_by_index(idx));
        auto arr = arrival_distribution_single(m, ctx);
        auto p = time_average_single(m, arr);
        for (long n = 0; n < 6; ++n) {
            Real lhs = Real(5) * arr.pi[static_cast<std::size_t>(n)];
            Real rhs = Real(std::min<long>(n + 1, 3)) * Real(2) * p[static_cast<std::size_t>(n + 1)];
            CHECK(abs(lhs - rhs) < tol);
        }
        Real sum(0);
        for (const auto& v : p) sum += v;
        CHECK(abs(sum - 1) < tol);
    }
}

TEST_CASE("single-server specialization: the correction sum is empty") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 1;
    m.service_rate = Real(3);
    m.interarrival = Interarrival<Real>::exponential(Real(2));
    m.buffer = BufferMode::finite;
    m.capacity = 5;
    auto arr = arrival_distribution_single(m, ctx);
    auto p = time_average_single(m, arr);
    const Real rho = Real(2) / 3;
    for (long n = 1; n <= 5; ++n)
        CHECK(abs(p[static_cast<std::size_t>(n)] - rho * arr.pi[static_cast<std::size_t>(n - 1)]) <
              digits_tolerance(ctx.digits, 12));
    auto closed = oracles::mmcn_time_average(Real(2), Real(3), 1, 5);
    for (long n = 0; n <= 5; ++n)
        CHECK(abs(p[static_cast<std::size_t>(n)] - closed[static_cast<std::size_t>(n)]) <
              Real("1e-20"));
}

TEST_CASE("batch time averages: unit batches collapse to the single-arrival map") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    for (auto rejection : {Rejection::partial, Rejection::full}) {
        auto m = small_scale(Interarrival<Real>::erlang(2, Real(5)));
        auto single_arr = arrival_distribution_single(m, ctx);
        auto single_p = time_average_single(m, single_arr);
        m.batch = Batch<Real>::unit();
        m.rejection = rejection;
        auto batch_arr = arrival_distribution_batch(m, ctx);
        auto batch_p = time_average_batch(m, batch_arr);
        for (std::size_t n = 0; n < single_p.size(); ++n)
            CHECK(abs(batch_p[n] - single_p[n]) < 10 * ctx.eps_sigma);
    }
}

TEST_CASE("batch time averages: p(0) closes the distribution") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 1;
    m.service_rate = Real(2);
    m.interarrival = Interarrival<Real>::exponential(Real(1));
    m.buffer = BufferMode::finite;
    m.capacity = 5;
    m.batch = Batch<Real>::geometric(Real("0.5"), 6, ctx.eps_trunc);
    for (auto rejection : {Rejection::partial, Rejection::full}) {
        m.rejection = rejection;
        auto arr = arrival_distribution_batch(m, ctx);
        auto p = time_average_batch(m, arr);
        Real sum(0);
        for (const auto& v : p) sum += v;
        CHECK(abs(sum - 1) < digits_tolerance(ctx.digits, 20));
        for (const auto& v : p) CHECK(v >= 0);
    }
}

TEST_CASE("infinite-buffer performance uses the offered rate") {
    PrecisionGuard guard(50);
    auto ctx = ctx50();
    Model<Real> m;
    m.servers = 3;
    m.service_rate = Real(2);
    m.interarrival = Interarrival<Real>::exponential(Real(5));
    m.buffer = BufferMode::infinite;
    auto arr = arrival_distribution_single(m, ctx);
    auto p = time_average_single(m, arr);
    auto rep = performance(m, p, arr);
    CHECK(abs(rep.lambda_eff - 5) < Real("1e-45"));
    CHECK(abs(rep.W - rep.L / 5) < Real("1e-45"));
    CHECK(abs(rep.Wq - (rep.W - Real(1) / 2)) < Real("1e-45"));
    CHECK(rep.blocking_time_avg == 0);
    // Lq = L - expected busy servers = L - lambda/mu for a stable system;
    // holds up to the truncated tail mass
    CHECK(abs(rep.Lq - (rep.L - Real(5) / 2)) < Real("1e-12"));
}
