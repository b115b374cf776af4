#pragma once

#include <string>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/real.hpp"
#include "qnet/solver.hpp"

namespace qnet {

/// Performance summary. Two finite-buffer waiting-time conventions exist:
/// the primary one divides by lambda_A (1 - p(N)) (time-average blocking),
/// which is the convention the reference tables follow; the alternate uses
/// the pre-arrival blocking probability pi(N).
template <class R>
struct PerformanceReport {
    R L{};                    // mean number in system
    R Lq{};                   // mean number in queue
    R W{};                    // mean time in system, primary convention
    R Wq{};                   // W - 1/mu
    R lambda_eff{};           // accepted customer rate under the primary convention
    R blocking_time_avg{};    // p(N) (0 for infinite buffers)
    R blocking_pre_arrival{}; // pi(N) (0 for infinite buffers)
    R W_alt{};                // L / (lambda_A (1 - pi(N)))
    std::string convention = "time-average-blocking";
};

/// Time-average distribution from the pre-arrival one, single arrivals.
/// For n >= 1 this is rate conservation lambda pi(n-1) = min(n,c) mu p(n);
/// p(0) closes the distribution in closed form (the pi(N) term drops for
/// infinite buffers).
template <class R>
std::vector<R> time_average_single(const Model<R>& model, const ArrivalDistribution<R>& arr) {
    if (model.has_batch())
        throw PolicyError("time_average_single: model carries batch arrivals");
    const int c = model.servers;
    const long N = arr.level;
    const R rho = model.interarrival.rate / (R(c) * model.service_rate);
    std::vector<R> p(static_cast<std::size_t>(N) + 1, R(0));
    R p0 = 1 - rho;
    if (model.buffer == BufferMode::finite) p0 += rho * arr.pi[static_cast<std::size_t>(N)];
    for (int k = 0; k <= c - 2; ++k)
        p0 -= rho * R(c - k - 1) * arr.pi[static_cast<std::size_t>(k)] / R(k + 1);
    // p(0) compounds the error of every other entry; truncated infinite
    // models can push a genuinely tiny p(0) slightly negative, bounded by
    // the geometric-tail truncation scale pi(N).
    R tol = balance_tolerance<R>(12);
    if (model.buffer == BufferMode::infinite)
        tol += 100 * arr.pi[static_cast<std::size_t>(N)];
    if (p0 < 0) {
        if (p0 < -tol)
            throw NegativeProbability("time_average_single: p(0) = " + format_real(p0, 6) +
                                      " < 0; inconsistent inputs");
        p0 = R(0);
    }
    p[0] = p0;
    for (long n = 1; n <= std::min<long>(c, N); ++n)
        p[static_cast<std::size_t>(n)] =
            R(c) * rho * arr.pi[static_cast<std::size_t>(n - 1)] / R(n);
    for (long n = c + 1; n <= N; ++n)
        p[static_cast<std::size_t>(n)] = rho * arr.pi[static_cast<std::size_t>(n - 1)];
    return p;
}

/// Time-average distribution for batch arrivals, by level crossing: an
/// upcrossing of level n happens when an arrival sees k < n and brings at
/// least n-k admitted customers, a downcrossing at rate min(n,c) mu p(n).
/// Under full rejection, batches that would end above N do not cross at all,
/// which removes the B^c(N-k+1) share. The k = 0 term belongs in the sum:
/// arrivals that find the system empty still cross every level their batch
/// covers. p(0) closes the distribution.
template <class R>
std::vector<R> time_average_batch(const Model<R>& model, const ArrivalDistribution<R>& arr) {
    if (!model.batch) throw PolicyError("time_average_batch: model carries no batch law");
    const Batch<R>& b = *model.batch;
    const int c = model.servers;
    const long N = arr.level;
    const R lambda = model.interarrival.rate;
    const bool full = model.rejection == Rejection::full;
    std::vector<R> p(static_cast<std::size_t>(N) + 1, R(0));
    R total(0);
    for (long n = 1; n <= N; ++n) {
        R s(0);
        for (long k = 0; k < n; ++k) {
            R cross = b.tail(n - k);
            if (full) cross -= b.tail(N - k + 1);
            s += arr.pi[static_cast<std::size_t>(k)] * cross;
        }
        R v = lambda * s / (R(std::min<long>(n, c)) * model.service_rate);
        if (v < 0) {
            if (v < -balance_tolerance<R>(12))
                throw NegativeProbability("time_average_batch: p(" + std::to_string(n) +
                                          ") < 0");
            v = R(0);
        }
        p[static_cast<std::size_t>(n)] = v;
        total += v;
    }
    R p0 = 1 - total;
    R tol = balance_tolerance<R>(12);
    if (model.buffer == BufferMode::infinite)
        tol += 100 * arr.pi[static_cast<std::size_t>(N)];
    if (p0 < 0) {
        if (p0 < -tol)
            throw NegativeProbability("time_average_batch: p(0) = " + format_real(p0, 6) +
                                      " < 0; inconsistent inputs");
        p0 = R(0);
    }
    p[0] = p0;
    return p;
}

/// L, Lq, W, Wq and the effective rate. Finite buffers use
/// lambda_eff = lambda_A (1 - p(N)); infinite buffers admit everything.
template <class R>
PerformanceReport<R> performance(const Model<R>& model, const std::vector<R>& p,
                                 const ArrivalDistribution<R>& arr) {
    const int c = model.servers;
    const long N = static_cast<long>(p.size()) - 1;
    PerformanceReport<R> rep;
    for (long i = 1; i <= N; ++i) rep.L += R(i) * p[static_cast<std::size_t>(i)];
    for (long i = c + 1; i <= N; ++i)
        rep.Lq += R(i - c) * p[static_cast<std::size_t>(i)];
    const R lambda_a = model.customer_rate();
    if (model.buffer == BufferMode::finite) {
        rep.blocking_time_avg = p[static_cast<std::size_t>(N)];
        rep.blocking_pre_arrival = arr.pi[static_cast<std::size_t>(N)];
        rep.lambda_eff = lambda_a * (1 - rep.blocking_time_avg);
        rep.W = rep.L / rep.lambda_eff;
        rep.W_alt = rep.L / (lambda_a * (1 - rep.blocking_pre_arrival));
    } else {
        rep.lambda_eff = lambda_a;
        rep.W = rep.L / lambda_a;
        rep.W_alt = rep.W;
    }
    rep.Wq = rep.W - 1 / model.service_rate;
    return rep;
}

}  // namespace qnet
