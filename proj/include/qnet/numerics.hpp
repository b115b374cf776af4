#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qnet/dense.hpp"
#include "qnet/errors.hpp"
#include "qnet/kernel.hpp"
#include "qnet/real.hpp"

namespace qnet {

/// Plain functional iteration x <- f(x). No acceleration: the sigma map is a
/// contraction on (0,1) for stable loads and the iterate sequence is monotone
/// there. For a contraction with rate r the distance to the fixed point is
/// about |step| r/(1-r), so termination scales the step tolerance by the
/// observed rate: the returned value is within 2 eps_sigma of the root, not
/// merely the last step.
template <class R, class F>
R solve_fixed_point(F&& f, R x0, const Precision<R>& ctx) {
    R x = std::move(x0);
    R prev_step(-1);
    for (long it = 0; it < ctx.fixed_point_cap; ++it) {
        R next = f(x);
        R step = abs(next - x);
        if (step < ctx.eps_sigma) {
            if (step == 0) return next;
            if (prev_step > 0 && prev_step > step) {
                R rate = step / prev_step;
                if (step * rate / (1 - rate) < ctx.eps_sigma) return next;
            }
        }
        prev_step = step;
        x = std::move(next);
    }
    throw NonConvergence("fixed-point iteration exceeded " +
                         std::to_string(ctx.fixed_point_cap) +
                         " steps; the system is likely unstable (rho >= 1)");
}

enum class StationaryMethod { automatic, power_iteration, direct_solve };

namespace detail {

template <class R>
std::vector<R> normalize_distribution(std::vector<R> v) {
    R sum(0);
    for (const auto& x : v) sum += x;
    if (!(sum > 0)) throw SingularSystem("stationary vector has nonpositive mass");
    for (auto& x : v) x /= sum;
    return v;
}

template <class R>
R stationary_residual(const TransitionMatrix<R>& P, const std::vector<R>& pi) {
    R worst(0);
    for (long j = 0; j < P.n; ++j) {
        R v(0);
        for (long i = 0; i < P.n; ++i) v += pi[static_cast<std::size_t>(i)] * P(i, j);
        R e = abs(v - pi[static_cast<std::size_t>(j)]);
        if (e > worst) worst = e;
    }
    return worst;
}

template <class R>
std::vector<R> stationary_by_power(const TransitionMatrix<R>& P, const Precision<R>& ctx) {
    const long n = P.n;
    std::vector<R> x(static_cast<std::size_t>(n), R(1) / R(n));
    std::vector<R> y(static_cast<std::size_t>(n));
    for (long it = 0; it < ctx.power_iteration_cap; ++it) {
        for (long j = 0; j < n; ++j) {
            R v(0);
            for (long i = 0; i < n; ++i) v += x[static_cast<std::size_t>(i)] * P(i, j);
            y[static_cast<std::size_t>(j)] = v;
        }
        R diff(0), sum(0);
        for (long j = 0; j < n; ++j) {
            R e = abs(y[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)]);
            if (e > diff) diff = e;
            sum += y[static_cast<std::size_t>(j)];
        }
        for (long j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = y[static_cast<std::size_t>(j)] / sum;
        if (diff < ctx.eps_sigma) return x;
    }
    throw NonConvergence("power iteration exceeded " + std::to_string(ctx.power_iteration_cap) +
                         " sweeps");
}

template <class R>
std::vector<R> stationary_by_direct(const TransitionMatrix<R>& P, const Precision<R>& ctx) {
    // (P^T - I) x = 0 with the last equation replaced by sum(x) = 1
    const long n = P.n;
    Dense<R> A(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            A(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                P(j, i) - (i == j ? R(1) : R(0));
    std::vector<R> b(static_cast<std::size_t>(n), R(0));
    for (long j = 0; j < n; ++j) A(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(j)) = R(1);
    b[static_cast<std::size_t>(n - 1)] = R(1);
    auto x = lu_solve(std::move(A), b);
    const R tol = digits_tolerance(ctx.digits, 10);
    for (auto& v : x) {
        if (v < 0) {
            if (v < -tol) throw SingularSystem("direct stationary solve produced negative mass");
            v = R(0);
        }
    }
    return x;
}

// The stationary distribution is unique iff the support digraph has exactly
// one closed strongly connected class. Kosaraju on the nonzero pattern.
template <class R>
void require_unique_recurrent_class(const TransitionMatrix<R>& P) {
    const long n = P.n;
    std::vector<std::vector<long>> fwd(static_cast<std::size_t>(n)), rev(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (P(i, j) > 0) {
                fwd[static_cast<std::size_t>(i)].push_back(j);
                rev[static_cast<std::size_t>(j)].push_back(i);
            }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<long> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<std::pair<long, std::size_t>> stack;
    for (long s = 0; s < n; ++s) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        stack.push_back({s, 0});
        seen[static_cast<std::size_t>(s)] = 1;
        while (!stack.empty()) {
            auto& [v, idx] = stack.back();
            if (idx < fwd[static_cast<std::size_t>(v)].size()) {
                long w = fwd[static_cast<std::size_t>(v)][idx++];
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back({w, 0});
                }
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    std::vector<long> comp(static_cast<std::size_t>(n), -1);
    long ncomp = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[static_cast<std::size_t>(*it)] >= 0) continue;
        std::vector<long> dfs{*it};
        comp[static_cast<std::size_t>(*it)] = ncomp;
        while (!dfs.empty()) {
            long v = dfs.back();
            dfs.pop_back();
            for (long w : rev[static_cast<std::size_t>(v)])
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = ncomp;
                    dfs.push_back(w);
                }
        }
        ++ncomp;
    }
    long closed = 0;
    for (long cidx = 0; cidx < ncomp; ++cidx) {
        bool leaves = false;
        for (long i = 0; i < n && !leaves; ++i) {
            if (comp[static_cast<std::size_t>(i)] != cidx) continue;
            for (long j : fwd[static_cast<std::size_t>(i)])
                if (comp[static_cast<std::size_t>(j)] != cidx) {
                    leaves = true;
                    break;
                }
        }
        if (!leaves) ++closed;
    }
    if (closed != 1)
        throw SingularSystem("chain is reducible: " + std::to_string(closed) +
                             " closed classes, stationary vector not unique");
}

}  // namespace detail

/// Stationary vector pi = pi P of a row-stochastic matrix with a unique
/// stationary distribution. Power iteration first; a dense direct solve of
/// (P^T - I) x = 0 with the normalization row backs it up for N <= 2000.
/// The two paths cross-check each other in the test suites.
template <class R>
std::vector<R> solve_stationary_vector(const TransitionMatrix<R>& P, const Precision<R>& ctx,
                                       StationaryMethod method = StationaryMethod::automatic) {
    detail::require_unique_recurrent_class(P);
    std::vector<R> pi;
    switch (method) {
        case StationaryMethod::power_iteration:
            pi = detail::stationary_by_power(P, ctx);
            break;
        case StationaryMethod::direct_solve:
            pi = detail::stationary_by_direct(P, ctx);
            break;
        case StationaryMethod::automatic:
            try {
                pi = detail::stationary_by_power(P, ctx);
            } catch (const NonConvergence&) {
                if (P.n > 2001) throw;
                pi = detail::stationary_by_direct(P, ctx);
            }
            break;
    }
    pi = detail::normalize_distribution(std::move(pi));
    R residual = detail::stationary_residual(P, pi);
    if (residual > 10 * ctx.eps_sigma)
        throw SingularSystem("stationary residual " + format_real(residual, 3) +
                             " exceeds 10*eps_sigma; the chain may lack a unique "
                             "stationary distribution");
    return pi;
}

}  // namespace qnet
