#pragma once

#include <algorithm>
#include <cmath>

namespace qnet {

// Make the std overloads visible next to the boost ones so unqualified math
// calls in templates resolve correctly for double instantiations too.
using std::abs;
using std::exp;
using std::expm1;
using std::floor;
using std::log;
using std::log1p;
using std::pow;
using std::sqrt;

}  // namespace qnet

namespace qnet::detail {

template <class R>
R factorial(long n) {
    R f(1);
    for (long i = 2; i <= n; ++i) f *= i;
    return f;
}

template <class R>
R binomial(long n, long k) {
    if (k < 0 || k > n) return R(0);
    k = std::min(k, n - k);
    R num(1), den(1);
    for (long i = 1; i <= k; ++i) {
        num *= (n - k + i);
        den *= i;
    }
    return num / den;
}

/// base^e for integer e by binary exponentiation; works for any scalar type.
template <class R>
R ipow(R base, long e) {
    if (e < 0) return R(1) / ipow(std::move(base), -e);
    R out(1);
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

}  // namespace qnet::detail
