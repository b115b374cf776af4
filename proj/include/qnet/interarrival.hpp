#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qnet/dense.hpp"
#include "qnet/errors.hpp"
#include "qnet/mathutil.hpp"

namespace qnet {

enum class Law { deterministic, exponential, erlang, hyperexponential, phase_type };

inline const char* law_name(Law law) {
    switch (law) {
        case Law::deterministic: return "deterministic";
        case Law::exponential: return "exponential";
        case Law::erlang: return "erlang";
        case Law::hyperexponential: return "hyperexponential";
        case Law::phase_type: return "phase-type";
    }
    return "?";
}

/// Interarrival-time law. Value type; validated on construction. The mean is
/// always 1/rate, and the Erlang law uses the mean-preserving phase rate
/// theta = k*rate so that changing k keeps E[A] fixed.
template <class R>
struct Interarrival {
    Law law = Law::exponential;

    R constant_time{};        // deterministic: a = 1/rate
    R rate_param{};           // exponential: lambda; erlang: lambda (theta = k*lambda)
    int phases = 1;           // erlang phase count k
    std::vector<R> weights;   // hyperexponential mixing weights
    std::vector<R> rates;     // hyperexponential phase rates
    std::vector<R> alpha;     // phase-type initial distribution
    Dense<R> subgen;          // phase-type subgenerator T
    std::vector<R> exit;      // phase-type exit vector T0 = -T*1

    R mean{};                 // E[A]
    R rate{};                 // 1/E[A]

    static Interarrival deterministic(const R& a) {
        if (!(a > 0)) throw ValidationError("interarrival.a: must be > 0");
        Interarrival d;
        d.law = Law::deterministic;
        d.constant_time = a;
        d.mean = a;
        d.rate = R(1) / a;
        return d;
    }

    static Interarrival exponential(const R& lambda) {
        if (!(lambda > 0)) throw ValidationError("interarrival.rate: must be > 0");
        Interarrival d;
        d.law = Law::exponential;
        d.rate_param = lambda;
        d.rate = lambda;
        d.mean = R(1) / lambda;
        return d;
    }

    static Interarrival erlang(int k, const R& lambda) {
        if (k < 1) throw ValidationError("interarrival.phases: must be >= 1");
        if (!(lambda > 0)) throw ValidationError("interarrival.rate: must be > 0");
        Interarrival d;
        d.law = Law::erlang;
        d.phases = k;
        d.rate_param = lambda;
        d.rate = lambda;
        d.mean = R(1) / lambda;
        return d;
    }

    static Interarrival hyperexponential(std::vector<R> w, std::vector<R> lam) {
        if (w.empty() || w.size() != lam.size())
            throw ValidationError("interarrival.weights/rates: need equal, nonempty lists");
        R wsum(0);
        for (const auto& x : w) {
            if (x < 0) throw ValidationError("interarrival.weights: must be nonnegative");
            wsum += x;
        }
        if (abs(wsum - 1) > R("1e-12"))
            throw ValidationError("interarrival.weights: must sum to 1");
        for (const auto& x : lam)
            if (!(x > 0)) throw ValidationError("interarrival.rates: must be > 0");
        Interarrival d;
        d.law = Law::hyperexponential;
        d.weights = std::move(w);
        d.rates = std::move(lam);
        d.mean = R(0);
        for (std::size_t i = 0; i < d.weights.size(); ++i) d.mean += d.weights[i] / d.rates[i];
        d.rate = R(1) / d.mean;
        return d;
    }

    /// Representation (alpha, T); the exit vector is derived as -T*1.
    static Interarrival phase_type(std::vector<R> a, Dense<R> T) {
        const std::size_t k = a.size();
        if (k == 0 || T.rows != k || T.cols != k)
            throw ValidationError("interarrival.phase-type: alpha and T sizes disagree");
        R asum(0);
        for (const auto& x : a) {
            if (x < 0) throw ValidationError("interarrival.alpha: must be nonnegative");
            asum += x;
        }
        if (abs(asum - 1) > R("1e-12"))
            throw ValidationError("interarrival.alpha: must sum to 1");
        std::vector<R> t0(k, R(0));
        for (std::size_t i = 0; i < k; ++i) {
            if (!(T(i, i) < 0))
                throw ValidationError("interarrival.subgenerator: diagonal must be negative");
            R rowsum(0);
            for (std::size_t j = 0; j < k; ++j) {
                if (i != j && T(i, j) < 0)
                    throw ValidationError("interarrival.subgenerator: off-diagonal must be nonnegative");
                rowsum += T(i, j);
            }
            t0[i] = -rowsum;
            if (t0[i] < 0) {
                if (t0[i] < -R("1e-12"))
                    throw ValidationError("interarrival.subgenerator: row sums must be <= 0");
                t0[i] = R(0);
            }
        }
        Interarrival d;
        d.law = Law::phase_type;
        d.alpha = std::move(a);
        d.subgen = std::move(T);
        d.exit = std::move(t0);
        // E[A] = alpha (-T)^{-1} 1
        Dense<R> negT(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) negT(i, j) = -d.subgen(i, j);
        std::vector<R> ones(k, R(1));
        auto m = lu_solve(negT, ones);
        d.mean = R(0);
        for (std::size_t i = 0; i < k; ++i) d.mean += d.alpha[i] * m[i];
        if (!(d.mean > 0))
            throw ValidationError("interarrival.phase-type: nonpositive mean");
        d.rate = R(1) / d.mean;
        return d;
    }
};

template <class To, class From>
Interarrival<To> interarrival_cast(const Interarrival<From>& d) {
    Interarrival<To> out;
    out.law = d.law;
    out.constant_time = static_cast<To>(d.constant_time);
    out.rate_param = static_cast<To>(d.rate_param);
    out.phases = d.phases;
    for (const auto& w : d.weights) out.weights.push_back(static_cast<To>(w));
    for (const auto& r : d.rates) out.rates.push_back(static_cast<To>(r));
    for (const auto& a : d.alpha) out.alpha.push_back(static_cast<To>(a));
    out.subgen = Dense<To>(d.subgen.rows, d.subgen.cols);
    for (std::size_t i = 0; i < d.subgen.a.size(); ++i) out.subgen.a[i] = static_cast<To>(d.subgen.a[i]);
    for (const auto& e : d.exit) out.exit.push_back(static_cast<To>(e));
    out.mean = static_cast<To>(d.mean);
    out.rate = static_cast<To>(d.rate);
    return out;
}

namespace detail {

/// Factored resolvent (sI - T)^{-1} for repeated phase-type solves at one s.
template <class R>
struct PhResolvent {
    Dense<R> lu;
    std::vector<std::size_t> perm;

    PhResolvent(const Dense<R>& T, const R& s) {
        const std::size_t k = T.rows;
        lu = Dense<R>(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) lu(i, j) = (i == j ? s : R(0)) - T(i, j);
        perm = lu_factor(lu);
    }

    std::vector<R> apply(const std::vector<R>& v) const { return lu_apply(lu, perm, v); }
};

template <class R>
R dot(const std::vector<R>& a, const std::vector<R>& b) {
    R s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Laplace-Stieltjes transform A*(s) = E[e^{-sA}], s >= 0.
template <class R>
R lst(const Interarrival<R>& d, const R& s) {
    switch (d.law) {
        case Law::deterministic:
            return exp(-s * d.constant_time);
        case Law::exponential:
            return d.rate_param / (s + d.rate_param);
        case Law::erlang: {
            R theta = R(d.phases) * d.rate_param;
            return detail::ipow(theta / (s + theta), d.phases);
        }
        case Law::hyperexponential: {
            R v(0);
            for (std::size_t i = 0; i < d.weights.size(); ++i)
                v += d.weights[i] * d.rates[i] / (s + d.rates[i]);
            return v;
        }
        case Law::phase_type: {
            detail::PhResolvent<R> res(d.subgen, s);
            return detail::dot(d.alpha, res.apply(d.exit));
        }
    }
    throw RegionError("lst: unknown law");
}

/// Signed n-th LST derivative A_n*(s) = (-1)^n d^n A*/ds^n = E[A^n e^{-sA}].
/// Closed forms per law; phase-type uses n! alpha (sI-T)^{-(n+1)} T0 with one
/// factorization reused across the n solves.
template <class R>
R lst_derivative(const Interarrival<R>& d, long n, const R& s) {
    if (n < 0) throw ValidationError("lst_derivative: n must be >= 0");
    if (n == 0) return lst(d, s);
    switch (d.law) {
        case Law::deterministic:
            return detail::ipow(d.constant_time, n) * exp(-s * d.constant_time);
        case Law::exponential:
            return detail::factorial<R>(n) * d.rate_param /
                   detail::ipow(s + d.rate_param, n + 1);
        case Law::erlang: {
            long k = d.phases;
            R theta = R(k) * d.rate_param;
            return detail::factorial<R>(n) * detail::binomial<R>(k + n - 1, k - 1) *
                   detail::ipow(theta, k) / detail::ipow(s + theta, k + n);
        }
        case Law::hyperexponential: {
            R v(0);
            for (std::size_t i = 0; i < d.weights.size(); ++i)
                v += d.weights[i] * d.rates[i] /
                     detail::ipow(s + d.rates[i], n + 1);
            return detail::factorial<R>(n) * v;
        }
        case Law::phase_type: {
            detail::PhResolvent<R> res(d.subgen, s);
            auto v = res.apply(d.exit);
            for (long i = 0; i < n; ++i) v = res.apply(v);
            return detail::factorial<R>(n) * detail::dot(d.alpha, v);
        }
    }
    throw RegionError("lst_derivative: unknown law");
}

/// Generator of the Poisson-weighted derivative terms
///     t_r = x^r A_r*(s) / r!,   r = 0, 1, 2, ...
/// advanced one index at a time in O(1) per law (O(k^2) for phase-type).
/// These terms are all positive and satisfy sum_r t_r = A*(s - x) for x < s.
template <class R>
class LstTermSeries {
public:
    LstTermSeries(const Interarrival<R>& d, const R& x, const R& s) : law_(d.law), x_(x) {
        switch (law_) {
            case Law::deterministic:
                xa_ = x * d.constant_time;
                value_ = exp(-s * d.constant_time);
                break;
            case Law::exponential:
                ratio_ = {x / (s + d.rate_param)};
                parts_ = {d.rate_param / (s + d.rate_param)};
                value_ = parts_[0];
                break;
            case Law::erlang: {
                R theta = R(d.phases) * d.rate_param;
                k_ = d.phases;
                ratio_ = {x / (s + theta)};
                parts_ = {detail::ipow(theta / (s + theta), d.phases)};
                value_ = parts_[0];
                break;
            }
            case Law::hyperexponential: {
                value_ = R(0);
                for (std::size_t i = 0; i < d.weights.size(); ++i) {
                    ratio_.push_back(x / (s + d.rates[i]));
                    parts_.push_back(d.weights[i] * d.rates[i] / (s + d.rates[i]));
                    value_ += parts_.back();
                }
                break;
            }
            case Law::phase_type: {
                res_ = std::make_unique<detail::PhResolvent<R>>(d.subgen, s);
                alpha_ = d.alpha;
                vec_ = res_->apply(d.exit);
                value_ = detail::dot(alpha_, vec_);
                break;
            }
        }
    }

    long index() const { return r_; }
    const R& value() const { return value_; }

    void advance() {
        ++r_;
        switch (law_) {
            case Law::deterministic:
                value_ = value_ * xa_ / r_;
                break;
            case Law::exponential:
                value_ = value_ * ratio_[0];
                break;
            case Law::erlang:
                // t_r / t_{r-1} = y (k + r - 1) / r for the negative-binomial terms
                parts_[0] = parts_[0] * ratio_[0] * R(k_ + r_ - 1) / R(r_);
                value_ = parts_[0];
                break;
            case Law::hyperexponential: {
                value_ = R(0);
                for (std::size_t i = 0; i < parts_.size(); ++i) {
                    parts_[i] *= ratio_[i];
                    value_ += parts_[i];
                }
                break;
            }
            case Law::phase_type: {
                vec_ = res_->apply(vec_);
                for (auto& v : vec_) v *= x_;
                value_ = detail::dot(alpha_, vec_);
                break;
            }
        }
    }

private:
    Law law_;
    long r_ = 0;
    int k_ = 1;
    R x_{}, xa_{}, value_{};
    std::vector<R> ratio_, parts_;
    std::unique_ptr<detail::PhResolvent<R>> res_;
    std::vector<R> alpha_, vec_;
};

/// Partial sum sum_{r=0}^{M} x^r A_r*(s) / r!. Together with the series tail
/// below it satisfies partial(M) + tail(M) = A*(s - x) for 0 <= x < s.
template <class R>
R lst_weighted_partial_sum(const Interarrival<R>& d, const R& x, const R& s, long M) {
    LstTermSeries<R> ts(d, x, s);
    R sum = ts.value();
    while (ts.index() < M) {
        ts.advance();
        sum += ts.value();
    }
    return sum;
}

namespace detail {

// Forward-sums the series from the current position until the terms are both
// descending and negligible relative to the accumulated tail.
template <class R>
R sum_remaining(LstTermSeries<R>& ts, const R& rel_tol) {
    R tail(0);
    R prev = ts.value();
    long guard = 0;
    for (;;) {
        ts.advance();
        const R& v = ts.value();
        if (v == 0) break;
        tail += v;
        const bool descending = v < prev;
        prev = v;
        if (descending && v <= tail * rel_tol) break;
        if (++guard > 8'000'000)
            throw NonConvergence("lst series tail did not settle within the term budget");
    }
    return tail;
}

}  // namespace detail

/// Series tail sum_{r=M+1}^inf x^r A_r*(s) / r!, summed forward over positive
/// terms. This is the numerically safe form of the bracket
/// A*((s-x)) - sum_{r<=M} x^r A_r*(s)/r!, whose subtraction form loses one
/// digit per factor ~x/s of tail decay.
template <class R>
R lst_series_tail(const Interarrival<R>& d, const R& x, const R& s, long M, const R& rel_tol) {
    LstTermSeries<R> ts(d, x, s);
    while (ts.index() < M) ts.advance();
    return detail::sum_remaining(ts, rel_tol);
}

/// tails[m] = sum_{r=m+1}^inf x^r A_r*(s)/r! for m = 0..m_max in one pass:
/// terms forward, suffix sums backward, so every depth keeps full relative
/// precision.
template <class R>
std::vector<R> lst_tail_table(const Interarrival<R>& d, const R& x, const R& s, long m_max,
                              const R& rel_tol) {
    LstTermSeries<R> ts(d, x, s);
    std::vector<R> term;
    term.reserve(static_cast<std::size_t>(m_max) + 2);
    term.push_back(ts.value());
    while (ts.index() < m_max + 1) {
        ts.advance();
        term.push_back(ts.value());
    }
    R acc = detail::sum_remaining(ts, rel_tol);
    std::vector<R> tails(static_cast<std::size_t>(m_max) + 1);
    for (long m = m_max; m >= 0; --m) {
        acc += term[static_cast<std::size_t>(m) + 1];
        tails[static_cast<std::size_t>(m)] = acc;
    }
    return tails;
}

/// Interarrival density a(t) for laws that have one (not deterministic).
/// Phase-type uses uniformization of exp(Tt).
template <class R>
R density(const Interarrival<R>& d, const R& t) {
    if (t < 0) return R(0);
    switch (d.law) {
        case Law::deterministic:
            throw RegionError("density: deterministic law is a point mass");
        case Law::exponential:
            return d.rate_param * exp(-d.rate_param * t);
        case Law::erlang: {
            R theta = R(d.phases) * d.rate_param;
            R v = theta * exp(-theta * t);
            for (int i = 1; i < d.phases; ++i) v = v * theta * t / i;
            return v;
        }
        case Law::hyperexponential: {
            R v(0);
            for (std::size_t i = 0; i < d.weights.size(); ++i)
                v += d.weights[i] * d.rates[i] * exp(-d.rates[i] * t);
            return v;
        }
        case Law::phase_type: {
            const std::size_t k = d.alpha.size();
            R uni(0);
            for (std::size_t i = 0; i < k; ++i) uni = std::max(uni, -d.subgen(i, i));
            // w = alpha * P^m with P = I + T/uni; density = e^{-uni t} sum w_m (uni t)^m/m! . T0
            std::vector<R> w = d.alpha;
            R weight = exp(-uni * t);
            if (weight == 0) return R(0);
            R out(0), coef = weight;
            long m_hi = static_cast<long>(static_cast<double>(uni * t)) + 60;
            for (long m = 0;; ++m) {
                R contrib(0);
                for (std::size_t i = 0; i < k; ++i) contrib += w[i] * d.exit[i];
                out += coef * contrib;
                if (m >= m_hi) break;
                std::vector<R> nw(k, R(0));
                for (std::size_t i = 0; i < k; ++i) {
                    for (std::size_t j = 0; j < k; ++j) {
                        R p = (i == j ? R(1) : R(0)) + d.subgen(i, j) / uni;
                        nw[j] += w[i] * p;
                    }
                }
                w = std::move(nw);
                coef = coef * uni * t / (m + 1);
            }
            return out;
        }
    }
    throw RegionError("density: unknown law");
}

}  // namespace qnet
