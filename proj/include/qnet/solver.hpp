#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qnet/kernel.hpp"
#include "qnet/numerics.hpp"

namespace qnet {

/// Pre-arrival (embedded-chain) stationary distribution.
template <class R>
struct ArrivalDistribution {
    std::vector<R> pi;               // pi(0..level), sums to 1
    std::optional<R> sigma;          // geometric decay rate, when a root solve ran
    std::optional<R> tail_constant;  // C with pi(n) = C sigma^n above the server level
    long level = 0;                  // N: buffer or truncation level
    R normalization{};               // Phi used to normalize
};

/// Root of sigma = A*(c mu (1 - sigma)) in (0,1) by plain iteration from 0.5.
/// Requires utilization < 1; for exponential interarrivals the root is the
/// utilization itself.
template <class R>
R solve_sigma(const Model<R>& model, const Precision<R>& ctx) {
    const R rho = model.utilization();
    if (!(rho < 1))
        throw NonConvergence("solve_sigma: utilization " + format_real(rho, 6) +
                             " >= 1, no root in (0,1)");
    const R cmu = R(model.servers) * model.service_rate;
    auto map = [&](const R& s) { return lst(model.interarrival, cmu * (1 - s)); };
    R sigma = solve_fixed_point(map, R(1) / 2, ctx);
    if (!(sigma > 0) || !(sigma < 1))
        throw NonConvergence("solve_sigma: iterate left (0,1)");
    return sigma;
}

/// Truncation level for the geometric tail: the integer part of
///     c + (ln eps_trunc - 2 ln(1-sigma)) / ln sigma,
/// matching the reference tables' convention. When a partial head mass
/// sum_{j<c} pi(j) is supplied, the sharper bound from the tail-constant
/// derivation is used instead.
template <class R>
long truncation_level(const R& sigma, int servers, const Precision<R>& ctx,
                      std::optional<R> pi_head = std::nullopt) {
    if (!(sigma > 0) || !(sigma < 1))
        throw ValidationError("truncation_level: sigma must lie in (0,1)");
    R bound = R(servers) + (log(ctx.eps_trunc) - 2 * log(1 - sigma)) / log(sigma);
    if (pi_head) {
        if (!(*pi_head >= 0) || !(*pi_head < 1))
            throw ValidationError("truncation_level: pi_head must lie in [0,1)");
        bound -= log(1 - *pi_head) / log(sigma);
    }
    if (bound > R(50'000'000))
        throw NonConvergence("truncation_level: level exceeds 5e7; sigma too close to 1");
    long n = static_cast<long>(floor(bound));
    return std::max<long>(n, servers);
}

namespace detail {

// Smallest n with sigma^n (1 - sigma) < eps: guarantees the unnormalized
// tail certificate |pi'(n+1) - pi'(n)| < eps.
template <class R>
long certificate_level(const R& sigma, const Precision<R>& ctx) {
    R bound = (log(ctx.eps_trunc) - log(1 - sigma)) / log(sigma);
    return static_cast<long>(floor(bound)) + 1;
}

// Downward cut-balance sweep: pi'(j) = sum_{k>j} pi'(k) a(k,j) / p(j, j+1).
template <class R>
void cut_balance_sweep(const TransitionMatrix<R>& P, const std::vector<std::vector<R>>& a,
                       std::vector<R>& pip, long from_j) {
    const long N = P.n - 1;
    for (long j = from_j; j >= 0; --j) {
        const R& up = P(j, j + 1);
        if (up == 0)
            throw DivisionHazard("cut balance: p(" + std::to_string(j) + "," +
                                 std::to_string(j + 1) +
                                 ") underflowed to zero at working precision");
        R s(0);
        for (long k = j + 1; k <= N; ++k)
            s += pip[static_cast<std::size_t>(k)] *
                 a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        pip[static_cast<std::size_t>(j)] = s / up;
    }
}

template <class R>
ArrivalDistribution<R> finite_single(const Model<R>& model, const Precision<R>& ctx) {
    const long N = model.capacity;
    if (N == 0) {
        ArrivalDistribution<R> out;
        out.pi = {R(1)};
        out.level = 0;
        out.normalization = R(1);
        return out;
    }
    auto P = build_matrix(model, N, ctx);
    auto a = cut_sums(P);
    const int c = model.servers;
    std::vector<R> pip(static_cast<std::size_t>(N) + 1, R(0));
    ArrivalDistribution<R> out;

    if (model.finite_method == FiniteMethod::exact) {
        // exact stationary vector of the finite chain: seed the top state
        pip[static_cast<std::size_t>(N)] = R(1);
        cut_balance_sweep(P, a, pip, N - 1);
        R phi(0);
        for (const auto& v : pip) phi += v;
        out.normalization = phi;
    } else {
        if (N < c)
            throw ValidationError(
                "finite_method: geometric-tail seeding needs capacity >= servers");
        R sigma = solve_sigma(model, ctx);
        R sp = detail::ipow(sigma, c);
        for (long j = c; j <= N; ++j) {
            pip[static_cast<std::size_t>(j)] = sp;
            sp *= sigma;
        }
        cut_balance_sweep(P, a, pip, c - 1);
        // Phi via the closed geometric partial sum
        R phi(0);
        for (long j = 0; j < c; ++j) phi += pip[static_cast<std::size_t>(j)];
        phi += detail::ipow(sigma, c) * (1 - detail::ipow(sigma, N - c + 1)) / (1 - sigma);
        out.sigma = sigma;
        out.tail_constant = 1 / phi;
        out.normalization = phi;
    }
    for (auto& v : pip) v /= out.normalization;
    out.pi = std::move(pip);
    out.level = N;
    return out;
}

template <class R>
ArrivalDistribution<R> infinite_single(const Model<R>& model, const Precision<R>& ctx) {
    const int c = model.servers;
    R sigma = solve_sigma(model, ctx);
    const long bound_level = truncation_level(sigma, c, ctx);
    // the solve works at a level that also satisfies the unnormalized-tail
    // certificate sigma^N (1 - sigma) < eps_trunc
    const long N = std::max({bound_level, certificate_level(sigma, ctx), static_cast<long>(c) + 1});

    KernelTables<R> tables(model, N, ctx);
    // stream rows k = c..N, accumulating S[j] = sum_k pi'(k) a(k,j), j < c
    std::vector<R> S(static_cast<std::size_t>(c), R(0));
    std::vector<R> pip(static_cast<std::size_t>(N) + 1, R(0));
    {
        R sp = detail::ipow(sigma, c);
        for (long k = c; k <= N; ++k) {
            auto head = tables.deep_head(k);
            pip[static_cast<std::size_t>(k)] = sp;
            R acc(0);
            for (int j = 0; j < c; ++j) {
                acc += head[static_cast<std::size_t>(j)];
                S[static_cast<std::size_t>(j)] += sp * acc;
            }
            sp *= sigma;
        }
    }
    // shallow cut sums a(k,j) for k < c
    std::vector<std::vector<R>> shallow_cum(static_cast<std::size_t>(c));
    for (int k = 1; k < c; ++k) {
        auto row = tables.shallow_row(k);
        std::vector<R> cum(row.size());
        R acc(0);
        for (std::size_t j = 0; j < row.size(); ++j) {
            acc += row[j];
            cum[j] = acc;
        }
        shallow_cum[static_cast<std::size_t>(k)] = std::move(cum);
    }
    for (long j = c - 1; j >= 0; --j) {
        R s = S[static_cast<std::size_t>(j)];
        for (long k = j + 1; k < c; ++k)
            s += pip[static_cast<std::size_t>(k)] *
                 shallow_cum[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        const R& up = tables.lst_at_mu(static_cast<int>(j) + 1);  // p(j, j+1) = A*((j+1) mu)
        if (up == 0)
            throw DivisionHazard("cut balance: p(j, j+1) underflowed at working precision");
        pip[static_cast<std::size_t>(j)] = s / up;
    }
    R phi(0);
    for (long j = 0; j < c; ++j) phi += pip[static_cast<std::size_t>(j)];
    phi += detail::ipow(sigma, c) * (1 - detail::ipow(sigma, N - c + 1)) / (1 - sigma);
    for (auto& v : pip) v /= phi;

    ArrivalDistribution<R> out;
    out.pi = std::move(pip);
    out.sigma = sigma;
    out.tail_constant = 1 / phi;
    out.level = N;
    out.normalization = phi;
    return out;
}

template <class R>
Batch<R> resolve_batch_support(const Batch<R>& b, long capacity, const Precision<R>& ctx) {
    if (b.tail_mass == 0 || b.support_cut() >= capacity) return b;
    switch (b.origin) {
        case BatchOrigin::geometric:
            return Batch<R>::geometric(b.origin_param, capacity, ctx.eps_trunc);
        case BatchOrigin::poisson:
            return Batch<R>::poisson(b.origin_param, capacity, ctx.eps_trunc);
        default:
            throw ValidationError(
                "batch.pmf: explicit pmf carrying tail mass must resolve sizes up to the "
                "buffer capacity");
    }
}

}  // namespace detail

/// Stationary pre-arrival distribution of the single-arrival model.
/// Finite buffers solve the finite chain (method per model.finite_method);
/// infinite buffers use the geometric tail above the truncation level.
template <class R>
ArrivalDistribution<R> arrival_distribution_single(const Model<R>& model,
                                                   const Precision<R>& ctx) {
    model.validate();
    if (model.has_batch())
        throw PolicyError("arrival_distribution_single: model carries batch arrivals");
    return model.buffer == BufferMode::finite ? detail::finite_single(model, ctx)
                                              : detail::infinite_single(model, ctx);
}

/// Stationary pre-arrival distribution of the batch-arrival model, from the
/// full stationary solve pi = pi P*. Infinite buffers are truncated at
/// truncation_level(sigma of the single-arrival root) + batch support, with
/// the tail certificate re-checked on the computed vector (level doubles on
/// failure, a few attempts).
template <class R>
ArrivalDistribution<R> arrival_distribution_batch(const Model<R>& model,
                                                  const Precision<R>& ctx) {
    model.validate();
    if (!model.batch)
        throw PolicyError("arrival_distribution_batch: model carries no batch law");
    ArrivalDistribution<R> out;

    if (model.buffer == BufferMode::finite) {
        const long N = model.capacity;
        Batch<R> b = detail::resolve_batch_support(*model.batch, N, ctx);
        auto base = single_arrival_rows(model, N, N + 1, ctx);
        auto Pstar = batch_transform(base, N, b, BufferMode::finite, model.rejection);
        out.pi = solve_stationary_vector(Pstar, ctx);
        out.level = N;
        out.normalization = R(1);
        return out;
    }

    R sigma = solve_sigma(model, ctx);
    const long base_level = std::max(truncation_level(sigma, model.servers, ctx),
                                     detail::certificate_level(sigma, ctx));
    long N = base_level + model.batch->support_cut();
    for (int attempt = 0;; ++attempt) {
        auto base = single_arrival_rows(model, N, N + 1, ctx);
        auto Pstar = batch_transform(base, N, *model.batch, BufferMode::infinite,
                                     Rejection::none);
        auto pi = solve_stationary_vector(Pstar, ctx);
        R tail_step = abs(pi[static_cast<std::size_t>(N)] - pi[static_cast<std::size_t>(N - 1)]);
        if (tail_step < ctx.eps_trunc) {
            out.pi = std::move(pi);
            out.sigma = sigma;
            out.level = N;
            out.normalization = R(1);
            return out;
        }
        if (attempt >= 3)
            throw NonConvergence(
                "arrival_distribution_batch: truncation certificate still failing at level " +
                std::to_string(N));
        N *= 2;
    }
}

}  // namespace qnet
