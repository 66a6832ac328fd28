#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "resched/random_stream.hpp"
#include "resched/simplex.hpp"

namespace resched {

/// Additive floor on every concentration produced by a policy.
inline constexpr double kAlphaOffset = 1e-3;
/// ln(tau) is clamped here inside log-density and score evaluations.
inline constexpr double kMinLogTau = -27.631021115928547;  // ln(1e-12)

/// Strictly decreasing timesteps t_1 > ... > t_L in (0, 1). The terminal
/// point t_{L+1} = 0 is implicit, so t_L equals the stopping margin.
struct Schedule {
    std::vector<double> timesteps;
    double stopping_margin = 0.0;

    std::size_t steps() const noexcept { return timesteps.size(); }
};

/// t_l = 1 - sum_{j<=l} tau_j for l = 1..L; margin = tau_{L+1}.
Schedule allocation_to_schedule(const SimplexAllocation& tau);

/// Inverse of allocation_to_schedule: diffs of (1, t_1, ..., t_L, 0).
std::vector<double> schedule_to_intervals(const Schedule& schedule);

/// Dirichlet concentrations; every component >= kAlphaOffset.
struct DirichletParams {
    std::vector<double> alpha;

    std::size_t size() const noexcept { return alpha.size(); }
    double total() const noexcept;
};

/// Throws DomainError unless every alpha is finite and >= kAlphaOffset.
void validate(const DirichletParams& params);

/// ln Gamma(sum alpha) - sum ln Gamma(alpha_j) + sum (alpha_j - 1) ln tau_j.
double dirichlet_log_prob(const SimplexAllocation& tau, const DirichletParams& alpha);

/// d/d alpha_j log Dir(tau; alpha) = psi(sum alpha) - psi(alpha_j) + ln tau_j.
std::vector<double> score_wrt_alpha(const SimplexAllocation& tau, const DirichletParams& alpha);

/// Mean of the Dirichlet, alpha / sum(alpha).
SimplexAllocation dirichlet_mean(const DirichletParams& alpha);

/// Fixed-length context summary fed to the feature network.
struct ContextFeatures {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// Context-free policy: the concentrations are the parameters.
struct AnalyticPolicy {
    DirichletParams params;
};

/// Two-layer perceptron: features -> tanh(W1 x + b1) -> W2 h + b2 -> softplus + offset.
///
/// Parameters live in one flat buffer, row-major, in the order W1, b1, W2, b2.
class FeatureNetPolicy {
public:
    FeatureNetPolicy(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);
    FeatureNetPolicy(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                     std::vector<double> weights);

    /// Scaled-normal init: W1 ~ N(0, 1/input), W2 ~ N(0, (0.01)^2/hidden), zero biases.
    static FeatureNetPolicy random_init(std::size_t input_dim, std::size_t hidden_dim,
                                        std::size_t output_dim, RandomStream& stream);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t hidden_dim() const noexcept { return hidden_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }

    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> weights() noexcept { return weights_; }

    std::span<const double> w1() const noexcept;
    std::span<const double> b1() const noexcept;
    std::span<const double> w2() const noexcept;
    std::span<const double> b2() const noexcept;

    static std::size_t parameter_count(std::size_t input_dim, std::size_t hidden_dim,
                                       std::size_t output_dim) noexcept;

private:
    std::size_t input_dim_;
    std::size_t hidden_dim_;
    std::size_t output_dim_;
    std::vector<double> weights_;
};

/// Either policy variant, with a flat parameter view for optimizers.
class PolicyParams {
public:
    enum class Variant { Analytic, FeatureNet };

    PolicyParams(AnalyticPolicy policy);    // NOLINT(google-explicit-constructor)
    PolicyParams(FeatureNetPolicy policy);  // NOLINT(google-explicit-constructor)

    Variant variant() const noexcept;
    bool is_analytic() const noexcept { return variant() == Variant::Analytic; }

    const AnalyticPolicy& analytic() const;
    const FeatureNetPolicy& feature_net() const;

    /// Dirichlet dimension L+1.
    std::size_t allocation_dim() const noexcept;
    std::size_t parameter_count() const noexcept;

    std::span<const double> flat() const noexcept;
    std::span<double> flat() noexcept;

    /// Restores the concentration floor after an optimizer step. No-op for
    /// the feature network, whose output floor is structural.
    void project();

private:
    std::variant<AnalyticPolicy, FeatureNetPolicy> policy_;
};

/// Intermediate activations of one forward pass, reused across rollouts of a context.
struct PolicyForward {
    DirichletParams alpha;
    std::vector<double> hidden;          // tanh activations (feature-net only)
    std::vector<double> preactivation;   // W2 h + b2 (feature-net only)
};

/// alpha = softplus(net(ctx)) + 1e-3; the analytic variant returns its stored params.
DirichletParams policy_forward(const PolicyParams& params, const ContextFeatures& ctx);
PolicyForward policy_forward_cached(const PolicyParams& params, const ContextFeatures& ctx);

/// grad_theta log pi(tau | ctx), aligned with PolicyParams::flat().
std::vector<double> policy_score(const PolicyParams& params, const ContextFeatures& ctx,
                                 const SimplexAllocation& tau);
/// Same, reusing a forward pass computed by policy_forward_cached.
std::vector<double> policy_score(const PolicyParams& params, const ContextFeatures& ctx,
                                 const PolicyForward& forward, const SimplexAllocation& tau);

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

}  // namespace resched
