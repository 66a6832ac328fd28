#pragma once

#include <span>

#include "resched/random_stream.hpp"
#include "resched/simplex.hpp"

namespace resched {

/// Digamma function psi(x) = d/dx ln Gamma(x), for x > 0.
///
/// Shifts the argument up to x >= 6 with psi(x) = psi(x + 1) - 1/x, then
/// sums the asymptotic series through the x^-14 term. Relative error is
/// below 1e-13 away from the positive root near 1.4616.
double digamma(double x);

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// One Gamma(shape, 1) draw.
double sample_gamma(double shape, RandomStream& stream);

/// ln of one Gamma(shape, 1) draw. Stays finite for shapes where the draw
/// itself underflows (shape around 1e-3).
double sample_log_gamma(double shape, RandomStream& stream);

/// Dirichlet draw by normalizing independent Gamma variates in log space.
/// Components are floored at kMinAllocation before the final renormalization,
/// so schedules built from the draw stay strictly decreasing in floating point.
SimplexAllocation sample_dirichlet(std::span<const double> concentrations, RandomStream& stream);

}  // namespace resched
