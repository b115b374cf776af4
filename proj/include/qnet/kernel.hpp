#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/real.hpp"

namespace qnet {

/// One-step transition matrix of the embedded pre-arrival chain on {0..N}.
template <class R>
struct TransitionMatrix {
    long n = 0;  // dimension N+1
    std::vector<R> entries;

    TransitionMatrix() = default;
    explicit TransitionMatrix(long dim) : n(dim), entries(static_cast<std::size_t>(dim) * dim, R(0)) {}

    R& operator()(long i, long j) { return entries[static_cast<std::size_t>(i) * n + j]; }
    const R& operator()(long i, long j) const {
        return entries[static_cast<std::size_t>(i) * n + j];
    }

    R row_sum(long i) const {
        R s(0);
        for (long j = 0; j < n; ++j) s += (*this)(i, j);
        return s;
    }

    R max_row_sum_error() const {
        R worst(0);
        for (long i = 0; i < n; ++i) {
            R e = abs(row_sum(i) - 1);
            if (e > worst) worst = e;
        }
        return worst;
    }
};

/// Shared per-model tables for producing rows of the unrestricted
/// single-arrival chain up to row index `depth`.
///
/// Row regions (c = servers, entries vanish for j > i+1):
///   i <= c-1, j <= i+1 : binomial alternating sum over A*((j+r)mu)
///   j >= c             : Poisson-weighted derivative term, depends on i-j+1
///   i >= c, 1<=j<=c-1  : alternating sum over k of
///                        coeff * (c/k)^{i-c+1} * tail_k(i-c+1), where
///                        tail_k(M) = sum_{r>M} (k mu)^r A_r*(c mu)/r!
///   i >= c, j = 0      : complement of the row
///
/// The tail form of the bracket keeps full relative precision at any depth;
/// the equivalent subtraction form A*((c-k)mu) - sum_{r<=M}(...) loses
/// roughly M log10(c/k) digits and is kept only as a shallow-depth oracle in
/// the tests.
template <class R>
class KernelTables {
public:
    KernelTables(const Model<R>& model, long depth, const Precision<R>& ctx)
        : c_(model.servers),
          mu_(model.service_rate),
          cmu_(R(model.servers) * model.service_rate),
          dist_(model.interarrival),
          digits_(ctx.digits) {
        const R rel_tol = pow(R(10), -(ctx.digits + 8));
        for (int k = 0; k <= c_; ++k) lst_at_mu_.push_back(lst(dist_, R(k) * mu_));

        const long m_max = std::max<long>(depth - c_ + 1, 1);
        // region-2 terms r2(m) = (c mu)^m A_m*(c mu)/m! and prefix sums
        LstTermSeries<R> r2(dist_, cmu_, cmu_);
        r2_.push_back(r2.value());
        s2_.push_back(r2.value());
        for (long m = 1; m <= m_max; ++m) {
            r2.advance();
            r2_.push_back(r2.value());
            s2_.push_back(s2_.back() + r2.value());
        }
        // per-k tail tables for the deep-row heads
        if (c_ > 1 && depth >= c_) {
            tails_.resize(static_cast<std::size_t>(c_));
            for (int k = 1; k <= c_ - 1; ++k)
                tails_[static_cast<std::size_t>(k)] =
                    lst_tail_table(dist_, R(k) * mu_, cmu_, m_max, rel_tol);
        }
        // coeff(j,k) magnitude c!/(j! k! (c-j-k)!), sign (-1)^{c-j-k}
        coeff_.assign(static_cast<std::size_t>(c_), {});
        R cfact = detail::factorial<R>(c_);
        for (int j = 1; j <= c_ - 1; ++j) {
            auto& row = coeff_[static_cast<std::size_t>(j)];
            for (int k = 1; k <= c_ - j; ++k)
                row.push_back(cfact / (detail::factorial<R>(j) * detail::factorial<R>(k) *
                                       detail::factorial<R>(c_ - j - k)));
        }
    }

    int servers() const { return c_; }
    const R& lst_at_mu(int k) const { return lst_at_mu_[static_cast<std::size_t>(k)]; }
    const R& region2_term(long m) const { return r2_[static_cast<std::size_t>(m)]; }
    const R& region2_prefix(long m) const { return s2_[static_cast<std::size_t>(m)]; }

    /// Row i for i <= c-1; entries j = 0..i+1 (j = 0 from the same binomial
    /// formula, which keeps the row-sum check meaningful for these rows).
    std::vector<R> shallow_row(long i) const {
        std::vector<R> row(static_cast<std::size_t>(i) + 2);
        for (long j = 0; j <= i + 1; ++j) {
            R pos(0), neg(0);
            for (long r = 0; r <= i - j + 1; ++r) {
                R term = detail::binomial<R>(i - j + 1, r) * lst_at_mu_[static_cast<std::size_t>(j + r)];
                if (r % 2 == 0)
                    pos += term;
                else
                    neg += term;
            }
            row[static_cast<std::size_t>(j)] = detail::binomial<R>(i + 1, i - j + 1) * (pos - neg);
        }
        return row;
    }

    /// Head of row i for i >= c: entries j = 0..c-1, with j = 0 by row
    /// complement. Deep rows have vanishing heads; tiny negative complements
    /// (below the working-precision floor) are clamped to zero.
    std::vector<R> deep_head(long i) const {
        const long m = i - c_ + 1;
        std::vector<R> head(static_cast<std::size_t>(c_), R(0));
        R head_sum(0);
        for (int j = 1; j <= c_ - 1; ++j) {
            R pos(0), neg(0);
            const auto& coeff = coeff_[static_cast<std::size_t>(j)];
            for (int k = 1; k <= c_ - j; ++k) {
                R term = coeff[static_cast<std::size_t>(k - 1)] *
                         detail::ipow(R(c_) / k, m) *
                         tails_[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
                if ((c_ - j - k) % 2 == 0)
                    pos += term;
                else
                    neg += term;
            }
            head[static_cast<std::size_t>(j)] = pos - neg;
            head_sum += head[static_cast<std::size_t>(j)];
        }
        R p0 = 1 - region2_prefix(m) - head_sum;
        if (p0 < 0) {
            if (p0 < -digits_tolerance(digits_, 10))
                throw StochasticityViolation(
                    "row " + std::to_string(i) +
                    ": complement entry is negative beyond tolerance; raise the working precision");
            p0 = R(0);
        }
        head[0] = p0;
        return head;
    }

    /// Full row i of the unrestricted chain, truncated to `width` entries.
    std::vector<R> row(long i, long width) const {
        std::vector<R> out(static_cast<std::size_t>(width), R(0));
        if (i <= c_ - 1) {
            auto r = shallow_row(i);
            for (long j = 0; j < std::min<long>(width, static_cast<long>(r.size())); ++j)
                out[static_cast<std::size_t>(j)] = r[static_cast<std::size_t>(j)];
            return out;
        }
        auto head = deep_head(i);
        for (long j = 0; j < std::min<long>(width, c_); ++j)
            out[static_cast<std::size_t>(j)] = head[static_cast<std::size_t>(j)];
        for (long j = c_; j <= std::min<long>(i + 1, width - 1); ++j)
            out[static_cast<std::size_t>(j)] = region2_term(i - j + 1);
        return out;
    }

private:
    int c_;
    R mu_, cmu_;
    Interarrival<R> dist_;
    int digits_;
    std::vector<R> lst_at_mu_;
    std::vector<R> r2_, s2_;
    std::vector<std::vector<R>> tails_;   // tails_[k][m]
    std::vector<std::vector<R>> coeff_;   // coeff_[j][k-1]
};

/// One-step transition probability p(i, j) of the single-arrival chain
/// (unrestricted state space; finite-buffer row duplication is applied by
/// build_matrix). Returns 0 outside the reachable region j <= i+1.
template <class R>
R transition_prob(const Model<R>& model, long i, long j, const Precision<R>& ctx) {
    if (model.has_batch())
        throw PolicyError("transition_prob: single-arrival kernel only; use batch_transform");
    if (i < 0 || j < 0) throw RegionError("transition_prob: negative state index");
    const int c = model.servers;
    if (j > i + 1) return R(0);
    const R mu = model.service_rate;
    const R cmu = R(c) * mu;
    const auto& d = model.interarrival;
    const R rel_tol = pow(R(10), -(ctx.digits + 8));
    if (j >= c) {
        // j <= i+1 here
        LstTermSeries<R> ts(d, cmu, cmu);
        for (long m = 0; m < i - j + 1; ++m) ts.advance();
        return ts.value();
    }
    if (i <= c - 1) {
        R pos(0), neg(0);
        for (long r = 0; r <= i - j + 1; ++r) {
            R term = detail::binomial<R>(i - j + 1, r) * lst(d, R(j + r) * mu);
            if (r % 2 == 0)
                pos += term;
            else
                neg += term;
        }
        return detail::binomial<R>(i + 1, i - j + 1) * (pos - neg);
    }
    const long m = i - c + 1;
    auto region3 = [&](long jj) {
        R pos(0), neg(0);
        R cfact = detail::factorial<R>(c);
        for (int k = 1; k <= c - jj; ++k) {
            R term = cfact /
                     (detail::factorial<R>(jj) * detail::factorial<R>(k) *
                      detail::factorial<R>(c - jj - k)) *
                     detail::ipow(R(c) / k, m) *
                     lst_series_tail(d, R(k) * mu, cmu, m, rel_tol);
            if ((c - jj - k) % 2 == 0)
                pos += term;
            else
                neg += term;
        }
        return pos - neg;
    };
    if (j >= 1) return region3(j);
    // j = 0 for i >= c: complement over the reachable row
    LstTermSeries<R> ts(d, cmu, cmu);
    R s2 = ts.value();
    for (long mm = 1; mm <= m; ++mm) {
        ts.advance();
        s2 += ts.value();
    }
    R head(0);
    for (long jj = 1; jj <= c - 1; ++jj) head += region3(jj);
    return 1 - s2 - head;
}

/// Rows 0..count-1 of the unrestricted single-arrival chain, each truncated
/// to `width` entries.
template <class R>
std::vector<std::vector<R>> single_arrival_rows(const Model<R>& model, long count, long width,
                                                const Precision<R>& ctx) {
    KernelTables<R> tables(model, count - 1, ctx);
    std::vector<std::vector<R>> rows;
    rows.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) rows.push_back(tables.row(i, width));
    return rows;
}

/// Embedded-chain matrix on {0..N}. Rows 0..N-1 are the unrestricted rows
/// (complete, since upward jumps are +1); row N repeats row N-1: a full
/// system loses the arrival, so its row equals the one whose admission just
/// filled the system. The same rule closes the top level when an infinite
/// model is materialized at a truncation level.
template <class R>
TransitionMatrix<R> build_matrix(const Model<R>& model, long N, const Precision<R>& ctx) {
    if (N < 0) throw ValidationError("build_matrix: N must be >= 0");
    TransitionMatrix<R> P(N + 1);
    if (N == 0) {
        P(0, 0) = R(1);
        return P;
    }
    auto rows = single_arrival_rows(model, N, N + 1, ctx);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j <= N; ++j) P(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (long j = 0; j <= N; ++j) P(N, j) = P(N - 1, j);

    const R tol = digits_tolerance(ctx.digits, 10);
    for (long i = 0; i <= N; ++i) {
        R err = abs(P.row_sum(i) - 1);
        if (err > tol)
            throw StochasticityViolation("build_matrix: row " + std::to_string(i) +
                                         " sum off by " + format_real(err, 3) +
                                         "; raise the working precision");
    }
    return P;
}

/// Cut sums a(k, j) = sum_{i<=j} p(k, i): cumulative row sums, so that
/// a(k, n-1) = 1 for every k.
template <class R>
std::vector<std::vector<R>> cut_sums(const TransitionMatrix<R>& P) {
    std::vector<std::vector<R>> a(static_cast<std::size_t>(P.n));
    for (long k = 0; k < P.n; ++k) {
        auto& row = a[static_cast<std::size_t>(k)];
        row.resize(static_cast<std::size_t>(P.n));
        R acc(0);
        for (long j = 0; j < P.n; ++j) {
            acc += P(k, j);
            row[static_cast<std::size_t>(j)] = acc;
        }
    }
    return a;
}

/// Batch-arrival kernel p*(i, j) on {0..N} from the single-arrival rows.
///
/// A batch of size k admitted from state i lands the system at post-arrival
/// level i+k, whose next pre-arrival distribution is base row i+k-1 (row m-1
/// carries post-arrival level m). The three cases differ only in how sizes
/// map to levels:
///   infinite           p*(i,.) = sum_k b(k) base(i+k-1)   (tail mass lumped
///                      onto the last pmf entry; the truncation level closes
///                      the top like a partial-rejection boundary)
///   partial rejection  sizes k >= N-i admit only to the brim: row base(N-1)
///                      with weight B^c(N-i)
///   full rejection     sizes k > N-i are dropped whole: the system keeps
///                      level i, i.e. row base(i-1), or stays empty at i=0
template <class R>
TransitionMatrix<R> batch_transform(const std::vector<std::vector<R>>& base, long N,
                                    const Batch<R>& batch, BufferMode buffer,
                                    Rejection rejection) {
    if (buffer == BufferMode::infinite && rejection != Rejection::none)
        throw PolicyError("batch_transform: rejection policy needs a finite buffer");
    if (buffer == BufferMode::finite && rejection == Rejection::none)
        throw PolicyError("batch_transform: finite buffer needs a rejection policy");
    if (static_cast<long>(base.size()) < N)
        throw ValidationError("batch_transform: need base rows 0..N-1");
    if (buffer == BufferMode::finite && batch.tail_mass != 0 && batch.support_cut() < N)
        throw ValidationError(
            "batch_transform: pmf with residual tail mass must resolve sizes up to the buffer "
            "capacity");

    const Batch<R> b = buffer == BufferMode::infinite ? batch.lumped() : batch;
    const long K = b.support_cut();
    TransitionMatrix<R> P(N + 1);
    auto add_row = [&](long i, const R& w, long level) {
        if (w == 0) return;
        if (level == 0) {
            P(i, 0) += w;  // empty system stays empty over one interarrival
            return;
        }
        const auto& src = base[static_cast<std::size_t>(level - 1)];
        for (long j = 0; j <= N; ++j) P(i, j) += w * src[static_cast<std::size_t>(j)];
    };

    for (long i = 0; i <= N; ++i) {
        if (rejection == Rejection::full) {
            for (long k = 1; k <= std::min(K, N - i); ++k)
                add_row(i, b.pmf[static_cast<std::size_t>(k - 1)], i + k);
            add_row(i, b.tail(N - i + 1), i);
        } else {
            for (long k = 1; k <= std::min(K, N - i - 1); ++k)
                add_row(i, b.pmf[static_cast<std::size_t>(k - 1)], i + k);
            add_row(i, b.tail(N - i), N);  // brim-filling and overflowing sizes
        }
    }
    return P;
}

}  // namespace qnet
