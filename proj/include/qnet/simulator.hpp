#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/rng.hpp"

namespace qnet {

/// Empirical distributions from one simulation run, with non-overlapping
/// batch-means standard errors. Frequencies are pooled over the post-warm-up
/// horizon.
struct SimulationResult {
    std::vector<double> pre_arrival;  // \hat{pi}(n)
    std::vector<double> time_avg;     // \hat{p}(n), time-weighted
    std::vector<double> se_pre;       // batch-means SE per state
    std::vector<double> se_time;
    std::uint64_t arrivals = 0;  // total batch arrivals simulated (incl. warm-up)
    std::uint64_t seed = 0;
    double accepted_fraction = 0;  // admitted customers / offered customers
    std::uint64_t offered_customers = 0;
    std::uint64_t accepted_customers = 0;
    std::uint64_t served_customers = 0;
    std::uint64_t in_system_at_end = 0;
};

namespace detail {

inline double sample_interarrival(const Interarrival<double>& d, SplitMix64& rng) {
    switch (d.law) {
        case Law::deterministic:
            return d.constant_time;
        case Law::exponential:
            return rng.exponential(d.rate_param);
        case Law::erlang: {
            double t = 0;
            const double theta = d.phases * d.rate_param;
            for (int i = 0; i < d.phases; ++i) t += rng.exponential(theta);
            return t;
        }
        case Law::hyperexponential: {
            double u = rng.uniform(), acc = 0;
            for (std::size_t i = 0; i < d.weights.size(); ++i) {
                acc += d.weights[i];
                if (u < acc || i + 1 == d.weights.size()) return rng.exponential(d.rates[i]);
            }
            return rng.exponential(d.rates.back());
        }
        case Law::phase_type: {
            // walk the absorbing Markov process
            const std::size_t k = d.alpha.size();
            double u = rng.uniform(), acc = 0;
            std::size_t phase = k - 1;
            for (std::size_t i = 0; i < k; ++i) {
                acc += d.alpha[i];
                if (u < acc) {
                    phase = i;
                    break;
                }
            }
            double t = 0;
            for (;;) {
                const double out_rate = -d.subgen(phase, phase);
                t += rng.exponential(out_rate);
                double v = rng.uniform() * out_rate;
                double cum = d.exit[phase];
                if (v < cum) return t;
                bool jumped = false;
                for (std::size_t j = 0; j < k; ++j) {
                    if (j == phase) continue;
                    cum += d.subgen(phase, j);
                    if (v < cum) {
                        phase = j;
                        jumped = true;
                        break;
                    }
                }
                if (!jumped) return t;  // numerical slack: treat as absorption
            }
        }
    }
    return 0;
}

inline std::uint64_t sample_batch_size(const Batch<double>& b, SplitMix64& rng) {
    if (b.is_unit()) return 1;
    if (b.origin == BatchOrigin::geometric) {
        // P(X = k) = (1-q) q^{k-1}: inverse transform
        const double q = b.origin_param;
        double u = rng.uniform();
        return 1 + static_cast<std::uint64_t>(std::floor(std::log1p(-u) / std::log(q)));
    }
    double u = rng.uniform(), acc = 0;
    for (std::size_t k = 0; k < b.pmf.size(); ++k) {
        acc += b.pmf[k];
        if (u < acc) return k + 1;
    }
    return b.pmf.size() + 1;  // residual tail mass lands at the cut + 1
}

struct Tally {
    std::vector<double> v;
    void add(std::size_t n, double w) {
        if (n >= v.size()) v.resize(n + 1, 0.0);
        v[n] += w;
    }
};

}  // namespace detail

/// Discrete-event oracle for GI^X/M/c and GI^X/M/c/N under partial or full
/// rejection. FIFO, c exponential servers; between arrivals the number in
/// system is a pure death process, so departures are simulated by chaining
/// exponentials at the state-dependent rate. Pre-arrival states are tallied
/// just before each batch joins; time averages weight the state holding
/// times. The first 5% of arrivals warm the system up untallied. Plain
/// doubles throughout: the oracle's job is statistical agreement, not digit
/// matching.
template <class R>
SimulationResult simulate(const Model<R>& model, std::uint64_t arrivals, std::uint64_t seed,
                          int batches = 32) {
    model.validate();
    if (arrivals < 10'000)
        throw InvalidHorizon("simulate: need at least 1e4 arrivals");
    if (batches < 2) throw InvalidHorizon("simulate: need at least 2 batches for SEs");
    const std::uint64_t warm = arrivals / 20;
    const std::uint64_t tallied = arrivals - warm;
    if (tallied / static_cast<std::uint64_t>(batches) < 100)
        throw InvalidHorizon("simulate: fewer than 100 tallied arrivals per batch");

    const Model<double> m = model_cast<double>(model);
    const Batch<double> b = m.batch ? *m.batch : Batch<double>::unit();
    const bool finite = m.buffer == BufferMode::finite;
    const std::uint64_t cap = finite ? static_cast<std::uint64_t>(m.capacity) : 0;
    const double mu = m.service_rate;
    const int c = m.servers;

    SplitMix64 rng(seed);
    SimulationResult res;
    res.arrivals = arrivals;
    res.seed = seed;

    detail::Tally time_all, pre_all;
    std::vector<detail::Tally> time_b(static_cast<std::size_t>(batches)),
        pre_b(static_cast<std::size_t>(batches));

    std::uint64_t x = 0;  // number in system
    const std::uint64_t per_batch = tallied / static_cast<std::uint64_t>(batches);

    for (std::uint64_t k = 0; k < arrivals; ++k) {
        const bool live = k >= warm;
        const int slot =
            live ? static_cast<int>(std::min<std::uint64_t>((k - warm) / per_batch,
                                                            static_cast<std::uint64_t>(batches) - 1))
                 : -1;
        double rem = detail::sample_interarrival(m.interarrival, rng);
        while (x > 0) {
            const double rate = static_cast<double>(std::min<std::uint64_t>(x, c)) * mu;
            const double d = rng.exponential(rate);
            if (d >= rem) break;
            if (live) {
                time_all.add(static_cast<std::size_t>(x), d);
                time_b[static_cast<std::size_t>(slot)].add(static_cast<std::size_t>(x), d);
            }
            rem -= d;
            --x;
            ++res.served_customers;
        }
        if (live) {
            time_all.add(static_cast<std::size_t>(x), rem);
            time_b[static_cast<std::size_t>(slot)].add(static_cast<std::size_t>(x), rem);
            pre_all.add(static_cast<std::size_t>(x), 1.0);
            pre_b[static_cast<std::size_t>(slot)].add(static_cast<std::size_t>(x), 1.0);
        }
        const std::uint64_t size = detail::sample_batch_size(b, rng);
        res.offered_customers += size;
        std::uint64_t admitted;
        if (!finite) {
            admitted = size;
        } else if (m.rejection == Rejection::full) {
            admitted = (x + size <= cap) ? size : 0;
        } else {
            admitted = std::min<std::uint64_t>(size, cap - x);
        }
        res.accepted_customers += admitted;
        x += admitted;
    }
    res.in_system_at_end = x;
    res.accepted_fraction =
        static_cast<double>(res.accepted_customers) / static_cast<double>(res.offered_customers);

    const std::size_t states =
        std::max<std::size_t>(time_all.v.size(), pre_all.v.size());
    auto normalize = [&](detail::Tally& t) {
        t.v.resize(states, 0.0);
        double sum = 0;
        for (double v : t.v) sum += v;
        if (sum > 0)
            for (double& v : t.v) v /= sum;
    };
    normalize(time_all);
    normalize(pre_all);
    res.time_avg = time_all.v;
    res.pre_arrival = pre_all.v;

    res.se_pre.assign(states, 0.0);
    res.se_time.assign(states, 0.0);
    for (int bb = 0; bb < batches; ++bb) {
        normalize(pre_b[static_cast<std::size_t>(bb)]);
        normalize(time_b[static_cast<std::size_t>(bb)]);
    }
    for (std::size_t n = 0; n < states; ++n) {
        double mp = 0, mt = 0;
        for (int bb = 0; bb < batches; ++bb) {
            mp += pre_b[static_cast<std::size_t>(bb)].v[n];
            mt += time_b[static_cast<std::size_t>(bb)].v[n];
        }
        mp /= batches;
        mt /= batches;
        double sp = 0, st = 0;
        for (int bb = 0; bb < batches; ++bb) {
            sp += (pre_b[static_cast<std::size_t>(bb)].v[n] - mp) *
                  (pre_b[static_cast<std::size_t>(bb)].v[n] - mp);
            st += (time_b[static_cast<std::size_t>(bb)].v[n] - mt) *
                  (time_b[static_cast<std::size_t>(bb)].v[n] - mt);
        }
        res.se_pre[n] = std::sqrt(sp / (static_cast<double>(batches) * (batches - 1)));
        res.se_time[n] = std::sqrt(st / (static_cast<double>(batches) * (batches - 1)));
    }
    return res;
}

}  // namespace qnet
