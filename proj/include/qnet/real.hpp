#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>

#include <ios>
#include <string>
#include <string_view>

#include "qnet/errors.hpp"

namespace qnet {

namespace mp = boost::multiprecision;

/// Variable-precision floating-point scalar. Precision is set in significant
/// decimal digits via set_working_precision(); every number remembers the
/// precision it was created with, and arithmetic preserves the widest operand.
using Real = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;

inline constexpr int kSmallScaleDigits = 50;
inline constexpr int kLargeScaleDigits = 150;

inline int working_precision() { return static_cast<int>(Real::default_precision()); }

inline void set_working_precision(int digits) {
    Real::default_precision(static_cast<unsigned>(digits));
}

/// Scoped working-precision switch. Note: the underlying default is
/// process-global, so concurrent solves must share one digit setting.
class PrecisionGuard {
public:
    explicit PrecisionGuard(int digits) : saved_(working_precision()) {
        set_working_precision(digits);
    }
    ~PrecisionGuard() { set_working_precision(saved_); }
    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
    int saved_;
};

/// Numeric working context: significant digits, the fixed-point convergence
/// tolerance, and the geometric-tail truncation tolerance.
template <class R>
struct Precision {
    int digits = kSmallScaleDigits;
    R eps_sigma{};
    R eps_trunc{};
    long fixed_point_cap = 1'000'000;
    long power_iteration_cap = 500'000;
};

/// Parse a decimal literal at the given working precision.
inline Real parse_decimal(std::string_view text, int digits) {
    PrecisionGuard guard(digits);
    try {
        return Real(std::string(text));
    } catch (const std::exception&) {
        throw ParseError("not a decimal literal: '" + std::string(text) + "'");
    }
}

/// Validated context factory. Tolerances are decimal literals so that values
/// like 1e-125 survive parsing regardless of the caller's float width.
inline Precision<Real> make_context(int digits,
                                    std::string_view eps_sigma = "1e-40",
                                    std::string_view eps_trunc = "1e-16") {
    if (digits < 30) {
        throw ValidationError("precision.digits: must be at least 30 (got " +
                              std::to_string(digits) + ")");
    }
    Precision<Real> ctx;
    ctx.digits = digits;
    ctx.eps_sigma = parse_decimal(eps_sigma, digits);
    ctx.eps_trunc = parse_decimal(eps_trunc, digits);
    if (!(ctx.eps_sigma > 0) || !boost::math::isfinite(ctx.eps_sigma)) {
        throw ValidationError("precision.eps_sigma: must be a positive finite decimal");
    }
    if (!(ctx.eps_trunc > 0) || !boost::math::isfinite(ctx.eps_trunc)) {
        throw ValidationError("precision.eps_trunc: must be a positive finite decimal");
    }
    return ctx;
}

/// 10^-(digits - margin): the tolerance scale used by stochasticity and
/// balance checks.
inline Real digits_tolerance(int digits, int margin) {
    return pow(Real(10), -(digits - margin));
}

/// Same tolerance scale, generic over the scalar type (doubles carry about
/// 15 significant digits).
template <class R>
R balance_tolerance(int margin) {
    return R(digits_tolerance(working_precision(), margin));
}

template <>
inline double balance_tolerance<double>(int margin) {
    return std::pow(10.0, -(15 - margin));
}

/// Render with `significant` digits (0 = full working precision of `v`),
/// round-half-even, deterministic across runs.
inline std::string format_real(const Real& v, int significant = 0) {
    std::streamsize n = significant > 0 ? significant : static_cast<std::streamsize>(v.precision());
    return v.str(n, std::ios_base::fmtflags(0));
}

}  // namespace qnet
