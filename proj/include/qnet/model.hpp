#pragma once

#include <optional>
#include <string>

#include "qnet/batch.hpp"
#include "qnet/errors.hpp"
#include "qnet/interarrival.hpp"

namespace qnet {

enum class BufferMode { finite, infinite };
enum class Rejection { none, partial, full };

/// Strategy for the finite-buffer single-arrival stationary solve.
///   exact          - cut-balance recursion seeded at the top state; the
///                    stationary vector of the finite chain, valid for any
///                    offered load.
///   geometric_tail - seeds pi'(j) = sigma^j above the server level, i.e. the
///                    infinite-buffer tail shape carried into the finite
///                    chain. Needs rho < 1. This is the variant the reference
///                    small-scale tables were produced with; it is exact for
///                    exponential interarrivals and an approximation
///                    otherwise.
enum class FiniteMethod { exact, geometric_tail };

template <class R>
struct Model {
    int servers = 1;
    R service_rate{};  // mu, per server
    Interarrival<R> interarrival;
    BufferMode buffer = BufferMode::infinite;
    long capacity = 0;  // N, total system size cap (finite buffers)
    std::optional<Batch<R>> batch;
    Rejection rejection = Rejection::none;
    FiniteMethod finite_method = FiniteMethod::exact;

    bool has_batch() const { return batch.has_value() && !batch->is_unit(); }

    /// Customer arrival rate: lambda E[X] for batch arrivals, else lambda.
    R customer_rate() const {
        return batch ? interarrival.rate * batch->mean : interarrival.rate;
    }

    /// Utilization rho = lambda E[X] / (c mu).
    R utilization() const { return customer_rate() / (R(servers) * service_rate); }

    void validate() const {
        if (servers < 1) throw ValidationError("model.servers: must be >= 1");
        if (!(service_rate > 0)) throw ValidationError("model.service_rate: must be > 0");
        if (buffer == BufferMode::finite) {
            // capacity 0 is the degenerate single-state chain
            if (capacity < 0) throw ValidationError("model.buffer.capacity: must be >= 0");
            if (batch && rejection == Rejection::none)
                throw ValidationError(
                    "model.rejection: required for batch arrivals with a finite buffer");
            if (batch && capacity < servers)
                throw ValidationError(
                    "model.buffer.capacity: must be >= servers for batch rejection policies");
            if (!batch && rejection != Rejection::none)
                throw ValidationError("model.rejection: only meaningful with batch arrivals");
        } else {
            if (rejection != Rejection::none)
                throw ValidationError("model.rejection: only meaningful with a finite buffer");
            if (!(utilization() < 1))
                throw ValidationError("model: utilization rho = " +
                                      std::string("lambda E[X]/(c mu)") +
                                      " must be < 1 for an infinite buffer");
        }
        if (buffer == BufferMode::finite && finite_method == FiniteMethod::geometric_tail &&
            !batch && !(utilization() < 1)) {
            throw ValidationError(
                "model.finite_method: geometric-tail seeding needs utilization < 1");
        }
    }
};

template <class To, class From>
Model<To> model_cast(const Model<From>& m) {
    Model<To> out;
    out.servers = m.servers;
    out.service_rate = static_cast<To>(m.service_rate);
    out.interarrival = interarrival_cast<To>(m.interarrival);
    out.buffer = m.buffer;
    out.capacity = m.capacity;
    if (m.batch) out.batch = batch_cast<To>(*m.batch);
    out.rejection = m.rejection;
    out.finite_method = m.finite_method;
    return out;
}

}  // namespace qnet
