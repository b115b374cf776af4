#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <string>

#include "qnet/errors.hpp"
#include "qnet/model.hpp"

namespace qnet {

struct QuadratureValue {
    double value = 0;
    double error_estimate = 0;
};

/// Double-integral oracle for the i >= c, j <= c-1 transition probabilities:
///
///   p(i,j) = C(c, c-j) (c mu)^{i-c+1} / (i-c)!
///            * int_0^inf int_0^t v^{i-c} e^{-mu(t-v) j - c mu v}
///                          (1 - e^{-mu(t-v)})^{c-j} dv dA(t)
///
/// evaluated with adaptive quadrature in ordinary doubles. This is the
/// integral the finite-sum kernel replaces; it stays deliberately independent
/// of that code path so the two can check each other. A deterministic law is
/// a point mass, so its outer integral is a single inner evaluation.
inline QuadratureValue quadrature_pij_oracle(const Model<double>& model, long i, long j,
                                             double abs_tol = 1e-10) {
    const int c = model.servers;
    if (!(j + 1 <= c && c <= i))
        throw ValidationError("quadrature_pij_oracle: requires j+1 <= c <= i");
    if (model.has_batch())
        throw PolicyError("quadrature_pij_oracle: single-arrival kernel only");
    const double mu = model.service_rate;
    const double cmu = c * mu;

    double logpref = 0;  // log of C(c, c-j) (c mu)^{i-c+1} / (i-c)!
    for (int r = 1; r <= c - j; ++r) logpref += std::log((c - r + 1.0) / r);
    logpref += (i - c + 1) * std::log(cmu) - std::lgamma(static_cast<double>(i - c + 1));

    auto inner_integrand = [&](double v, double t) {
        // log-form keeps v^{i-c} e^{-...} alive for deep rows
        double lg = 0;
        if (i > c) lg += (i - c) * std::log(v);
        lg += -mu * (t - v) * j - cmu * v;
        double one_minus = -std::expm1(-mu * (t - v));
        if (one_minus <= 0) return 0.0;
        lg += (c - j) * std::log(one_minus);
        return std::exp(logpref + lg);
    };

    boost::math::quadrature::tanh_sinh<double> inner;
    auto inner_value = [&](double t) {
        if (t <= 0) return 0.0;
        return inner.integrate([&](double v) { return inner_integrand(v, t); }, 0.0, t,
                               1e-12);
    };

    if (model.interarrival.law == Law::deterministic) {
        double t = model.interarrival.constant_time;
        double v = inner_value(t);
        return {v, 1e-11 * std::max(1.0, std::abs(v))};
    }

    boost::math::quadrature::exp_sinh<double> outer;
    double err = 0, l1 = 0;
    double value = outer.integrate(
        [&](double t) { return inner_value(t) * density(model.interarrival, t); }, 1e-12,
        &err, &l1);
    // err is the absolute inter-level difference of the outer rule; the inner
    // rule contributes at most its relative tolerance times the outer mass
    double estimate = err + 1e-12 * (1.0 + l1) + 1e-12;
    if (estimate > abs_tol)
        throw QuadratureFailure("quadrature_pij_oracle: error estimate " +
                                std::to_string(estimate) + " exceeds tolerance " +
                                std::to_string(abs_tol));
    return {value, estimate};
}

}  // namespace qnet
