#pragma once

#include <cstddef>
#include <vector>

#include "resched/random_stream.hpp"
#include "resched/schedule_policy.hpp"
#include "resched/simplex.hpp"

namespace resched {

/// 1-D Gaussian mixture data distribution.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stddevs;

    std::size_t components() const noexcept { return weights.size(); }
};

/// Throws DomainError for mismatched lengths, non-positive weights or scales,
/// or weights that do not sum to one.
void validate(const GaussianMixture& mixture);

/// One sampling instance: the data distribution and the initial noise x_T.
struct SamplerContext {
    GaussianMixture mixture;
    double initial_noise = 0.0;
};

struct RewardSpec {
    std::size_t reference_steps = 2048;
};

/// Ranges for random context generation.
struct ContextGeneratorConfig {
    std::size_t min_components = 2;
    std::size_t max_components = 4;
    double mean_range = 3.0;  // means ~ U(-range, range)
    double min_stddev = 0.05;  // stddevs log-uniform in [min, max]
    double max_stddev = 1.0;
};

/// Posterior component responsibilities at (x, t) for the path
/// x_t = (1 - t) x_0 + t z, z ~ N(0, 1). Computed in log space.
std::vector<double> responsibilities(double x, double t, const GaussianMixture& mixture);

/// E[z - x_0 | x_t = x]: the probability-flow velocity dx/dt.
/// Finite for t in [0, 1]; at t = 0 it is the data-side limit -x.
double marginal_velocity(double x, double t, const GaussianMixture& mixture);

/// Explicit Euler from t = 1 (x = x_T) through t_1, ..., t_L and then to 0.
/// Uses L + 1 velocity evaluations.
double integrate(const Schedule& schedule, const SamplerContext& ctx);

/// Euler with `steps` equal steps from 1 to 0.
double integrate_uniform(std::size_t steps, const SamplerContext& ctx);

/// Closed-form endpoint for a single-component mixture: m + s * x_T.
double single_gaussian_endpoint(const SamplerContext& ctx);

/// Schedule with L equally spaced timesteps (all L+1 intervals equal).
Schedule uniform_schedule(std::size_t steps);

/// -|x_0(schedule) - x_0(reference)|.
double terminal_reward(const Schedule& schedule, const SamplerContext& ctx, const RewardSpec& spec);
/// Same against a precomputed reference endpoint.
double terminal_reward(const Schedule& schedule, const SamplerContext& ctx, double reference_endpoint);

SamplerContext sample_context(const ContextGeneratorConfig& config, RandomStream& stream);

/// Feature layout (length 3 * kMaxComponents + 3): per-component means,
/// log-weights and log-stddevs, padded to kMaxComponents with (0, -10, 0)
/// and sorted by mean; then x_T, |x_T| and x_T^2.
inline constexpr std::size_t kMaxComponents = 4;
inline constexpr std::size_t kContextFeatureDim = 3 * kMaxComponents + 3;
ContextFeatures context_features(const SamplerContext& ctx);

/// Reward environment over random toy-sampler contexts, for the trainer.
class ToySamplerEnv {
public:
    struct Context {
        SamplerContext sampler;
        ContextFeatures features;
        double reference = 0.0;
    };

    ToySamplerEnv(std::size_t steps, ContextGeneratorConfig generator = {}, RewardSpec reward = {});

    std::size_t steps() const noexcept { return steps_; }
    std::size_t allocation_dim() const noexcept { return steps_ + 1; }
    std::size_t feature_dim() const noexcept { return kContextFeatureDim; }
    const ContextGeneratorConfig& generator() const noexcept { return generator_; }
    const RewardSpec& reward_spec() const noexcept { return reward_; }

    Context make_context(SamplerContext sampler) const;
    Context sample_context(RandomStream& stream) const;
    const ContextFeatures& features(const Context& ctx) const noexcept { return ctx.features; }
    double reward(const Context& ctx, const SimplexAllocation& tau, RandomStream& stream) const;

private:
    std::size_t steps_;
    ContextGeneratorConfig generator_;
    RewardSpec reward_;
};

}  // namespace resched
