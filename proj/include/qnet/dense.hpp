#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qnet/errors.hpp"
#include "qnet/mathutil.hpp"

namespace qnet {

/// Minimal row-major dense matrix; just enough for the small linear systems
/// this library solves (phase-type resolvents, stationary vectors).
template <class R>
struct Dense {
    std::size_t rows = 0, cols = 0;
    std::vector<R> a;

    Dense() = default;
    Dense(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, R(0)) {}

    R& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const R& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

/// LU factorization with partial pivoting, in place. Returns the row
/// permutation. Throws SingularSystem on a vanishing pivot.
template <class R>
std::vector<std::size_t> lu_factor(Dense<R>& m) {
    if (m.rows != m.cols) throw SingularSystem("lu_factor: matrix not square");
    const std::size_t n = m.rows;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        R best = abs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            R v = abs(m(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0) throw SingularSystem("lu_factor: zero pivot at column " + std::to_string(k));
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(perm[k], perm[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            R f = m(i, k) / m(k, k);
            m(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return perm;
}

template <class R>
std::vector<R> lu_apply(const Dense<R>& lu, const std::vector<std::size_t>& perm,
                        const std::vector<R>& b) {
    const std::size_t n = lu.rows;
    std::vector<R> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
        x[i] /= lu(i, i);
    }
    return x;
}

/// Solve A x = b destructively.
template <class R>
std::vector<R> lu_solve(Dense<R> m, const std::vector<R>& b) {
    auto perm = lu_factor(m);
    return lu_apply(m, perm, b);
}

}  // namespace qnet
