#include "resched/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <math.h>  // lgamma_r

#include "resched/errors.hpp"

namespace resched {

SimplexAllocation::SimplexAllocation(std::vector<double> tau) : tau_(std::move(tau)) {
    if (tau_.size() < 2) throw DomainError("simplex allocation needs at least 2 components");
    double sum = 0.0;
    for (double t : tau_) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("simplex allocation components must be positive and finite");
        }
        sum += t;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw DomainError("simplex allocation must sum to 1, got " + std::to_string(sum));
    }
}

SimplexAllocation SimplexAllocation::uniform(std::size_t dim) {
    return SimplexAllocation(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("digamma requires a finite positive argument");
    }
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Bernoulli-number tail: sum_k B_2k / (2k x^2k), k = 1..7.
    const double inv2 = 1.0 / (x * x);
    const double tail =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 -
                                        inv2 * (1.0 / 132.0 -
                                                inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 / x - tail;
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("log_gamma requires a finite positive argument");
    }
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

namespace {

// Marsaglia-Tsang squeeze for shape >= 1; returns ln of the draw.
double log_gamma_draw_large(double shape, RandomStream& stream) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = stream.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = stream.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
}

}  // namespace

double sample_log_gamma(double shape, RandomStream& stream) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw DomainError("gamma shape must be finite and positive");
    }
    if (shape >= 1.0) return log_gamma_draw_large(shape, stream);
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    const double boosted = log_gamma_draw_large(shape + 1.0, stream);
    return boosted + std::log(stream.uniform()) / shape;
}

double sample_gamma(double shape, RandomStream& stream) {
    return std::exp(sample_log_gamma(shape, stream));
}

SimplexAllocation sample_dirichlet(std::span<const double> concentrations, RandomStream& stream) {
    if (concentrations.size() < 2) throw DomainError("dirichlet dimension must be at least 2");
    for (double a : concentrations) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw DomainError("dirichlet concentrations must be finite and positive");
        }
    }
    std::vector<double> tau(concentrations.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tau.size(); ++j) {
        tau[j] = sample_log_gamma(concentrations[j], stream);
        max_log = std::max(max_log, tau[j]);
    }
    double sum = 0.0;
    for (double& t : tau) {
        t = std::exp(t - max_log);
        sum += t;
    }
    // Components below kMinAllocation would vanish from the schedule's
    // partial sums; lift them to the same floor the score clamps ln(tau) at.
    double floored_sum = 0.0;
    for (double& t : tau) {
        t = std::max(t / sum, kMinAllocation);
        floored_sum += t;
    }
    for (double& t : tau) t /= floored_sum;
    return SimplexAllocation(std::move(tau));
}

}  // namespace resched
