#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace resched {

/// Tolerance on |sum(tau) - 1| for a valid allocation.
inline constexpr double kSimplexTolerance = 1e-12;

/// Floor applied to sampled Dirichlet components before renormalizing.
inline constexpr double kMinAllocation = 1e-12;

/// A point in the open simplex: L+1 positive interval lengths summing to one.
class SimplexAllocation {
public:
    SimplexAllocation() = default;

    /// Validates positivity, finiteness and the unit sum; throws DomainError.
    explicit SimplexAllocation(std::vector<double> tau);

    /// Equal intervals 1/(dim).
    static SimplexAllocation uniform(std::size_t dim);

    std::span<const double> tau() const noexcept { return tau_; }
    std::size_t size() const noexcept { return tau_.size(); }
    double operator[](std::size_t i) const { return tau_[i]; }

private:
    std::vector<double> tau_;
};

}  // namespace resched
