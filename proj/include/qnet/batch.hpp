#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "qnet/errors.hpp"
#include "qnet/mathutil.hpp"

namespace qnet {

enum class BatchOrigin { explicit_pmf, geometric, poisson };

template <class R>
struct Batch;

template <class R>
Batch<R> normalize_from_zero_support(const std::vector<R>& g, R g_tail);

/// Batch-size law on support {1, 2, ...}, stored as a finite pmf vector plus
/// the explicit mass living at and beyond support_cut()+1. Keeping the tail
/// mass explicit is what keeps the transformed kernel rows stochastic exactly.
template <class R>
struct Batch {
    std::vector<R> pmf;   // pmf[k-1] = b(k), k = 1..support_cut()
    R tail_mass{};        // mass at sizes >= support_cut()+1
    R mean{};             // E[X]
    BatchOrigin origin = BatchOrigin::explicit_pmf;
    R origin_param{};     // geometric ratio or poisson mean

    long support_cut() const { return static_cast<long>(pmf.size()); }
    bool is_unit() const { return pmf.size() == 1 && tail_mass == 0; }

    static Batch unit() {
        Batch b;
        b.pmf = {R(1)};
        b.tail_mass = R(0);
        b.mean = R(1);
        return b;
    }

    /// Explicit pmf (b(1), b(2), ...) plus optional tail mass; normalized so
    /// the total is exactly 1 at working precision. The mean attributes the
    /// tail mass to size K+1, a lower bound on the true mean.
    static Batch from_pmf(std::vector<R> b, R tail = R(0)) {
        if (b.empty() && tail == 0) throw ValidationError("batch.pmf: empty law");
        R total = tail;
        for (const auto& v : b) {
            if (v < 0) throw ValidationError("batch.pmf: entries must be nonnegative");
            total += v;
        }
        if (tail < 0) throw ValidationError("batch.tail_mass: must be nonnegative");
        if (!(total > 0)) throw ValidationError("batch.pmf: total mass is zero");
        if (abs(total - 1) > R("1e-9"))
            throw ValidationError("batch.pmf: entries plus tail_mass must sum to 1");
        Batch out;
        out.pmf = std::move(b);
        for (auto& v : out.pmf) v /= total;
        out.tail_mass = tail / total;
        out.mean = R(0);
        for (std::size_t k = 0; k < out.pmf.size(); ++k) out.mean += R(k + 1) * out.pmf[k];
        out.mean += R(static_cast<long>(out.pmf.size()) + 1) * out.tail_mass;
        return out;
    }

    /// Geometric batch sizes: b(k) = (1-q) q^{k-1}. The pmf is materialized
    /// to `min_support` entries (at least until the residual drops under
    /// `resolve_eps`); tails beyond any index stay available in closed form.
    static Batch geometric(const R& ratio, long min_support, const R& resolve_eps) {
        if (!(ratio > 0) || !(ratio < 1))
            throw ValidationError("batch.ratio: must lie in (0,1)");
        Batch out;
        out.origin = BatchOrigin::geometric;
        out.origin_param = ratio;
        R term = 1 - ratio;  // b(1)
        long k = 1;
        for (;;) {
            out.pmf.push_back(term);
            R residual = detail::ipow(ratio, k);  // exact tail beyond k
            if (k >= min_support && residual < resolve_eps) {
                out.tail_mass = residual;
                break;
            }
            if (k > 4'000'000) throw ValidationError("batch.ratio: support resolution too large");
            term *= ratio;
            ++k;
        }
        out.mean = R(1) / (1 - ratio);
        return out;
    }

    /// Batch sizes from a Poisson(mean) count conditioned on being >= 1,
    /// i.e. b(k) = g(k)/(1 - g(0)) with g Poisson.
    static Batch poisson(const R& m, long min_support, const R& resolve_eps) {
        if (!(m > 0)) throw ValidationError("batch.mean: must be > 0");
        std::vector<R> g;
        R term = exp(-m);  // g(0)
        g.push_back(term);
        R used = term;
        long k = 0;
        for (;;) {
            ++k;
            term = term * m / k;
            g.push_back(term);
            used += term;
            if (k >= min_support && 1 - used < resolve_eps && term < resolve_eps) break;
            if (k > 4'000'000) throw ValidationError("batch.mean: support resolution too large");
        }
        Batch out = normalize_from_zero_support(g, 1 - used);
        out.origin = BatchOrigin::poisson;
        out.origin_param = m;
        out.mean = m / (1 - exp(-m));  // exact mean of the conditioned law
        return out;
    }

    /// Complementary size distribution B^c(m) = P(X >= m). Exact at every m
    /// for geometric origins; otherwise tail indices beyond the support cut
    /// resolve to the stored tail mass.
    R tail(long m) const {
        if (m <= 1) return R(1);
        if (origin == BatchOrigin::geometric) return detail::ipow(origin_param, m - 1);
        R acc = tail_mass;
        for (long k = support_cut(); k >= m; --k) acc += pmf[static_cast<std::size_t>(k - 1)];
        return acc;
    }

    /// Fold the tail mass onto the last pmf entry (used before transforming
    /// infinite-buffer kernels, where the sum over sizes must stop somewhere).
    Batch lumped() const {
        Batch out = *this;
        if (out.tail_mass != 0) {
            out.pmf.back() += out.tail_mass;
            out.tail_mass = R(0);
            out.origin = BatchOrigin::explicit_pmf;
        }
        return out;
    }
};

/// b(k) = g(k)/(1 - g(0)) for a size law g with support {0, 1, ...}.
template <class R>
Batch<R> normalize_from_zero_support(const std::vector<R>& g, R g_tail) {
    if (g.empty()) throw ValidationError("batch: empty zero-support pmf");
    for (const auto& v : g)
        if (v < 0) throw ValidationError("batch: pmf entries must be nonnegative");
    const R& g0 = g.front();
    if (g0 >= 1) throw DegenerateBatch("batch: all mass at size zero");
    std::vector<R> b(g.begin() + 1, g.end());
    R scale = 1 - g0;
    for (auto& v : b) v /= scale;
    Batch<R> out;
    out.pmf = std::move(b);
    out.tail_mass = g_tail / scale;
    if (out.pmf.empty()) throw DegenerateBatch("batch: no mass above size zero");
    out.mean = R(0);
    for (std::size_t k = 0; k < out.pmf.size(); ++k) out.mean += R(k + 1) * out.pmf[k];
    out.mean += R(static_cast<long>(out.pmf.size()) + 1) * out.tail_mass;
    return out;
}

template <class R>
Batch<R> normalize_from_zero_support(const std::vector<R>& g) {
    return normalize_from_zero_support(g, R(0));
}

/// B^c(m) = P(X >= m); B^c(1) = 1 and the sequence is nonincreasing.
template <class R>
R batch_tail(const Batch<R>& b, long m) {
    if (m < 1) throw ValidationError("batch_tail: m must be >= 1");
    return b.tail(m);
}

template <class To, class From>
Batch<To> batch_cast(const Batch<From>& b) {
    Batch<To> out;
    for (const auto& v : b.pmf) out.pmf.push_back(static_cast<To>(v));
    out.tail_mass = static_cast<To>(b.tail_mass);
    out.mean = static_cast<To>(b.mean);
    out.origin = b.origin;
    out.origin_param = static_cast<To>(b.origin_param);
    return out;
}

}  // namespace qnet
