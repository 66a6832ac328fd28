#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "resched/baselines.hpp"
#include "resched/errors.hpp"
#include "resched/parallel.hpp"
#include "resched/random_stream.hpp"
#include "resched/schedule_policy.hpp"
#include "resched/special_math.hpp"

namespace resched {

/// A reward environment: draws contexts, featurizes them, and scores a
/// sampled allocation. reward() must be pure given its stream.
template <class E>
concept RewardEnvironment = requires(const E& env, const typename E::Context& ctx, const SimplexAllocation& tau,
                                     RandomStream& stream) {
    { env.allocation_dim() } -> std::convertible_to<std::size_t>;
    { env.sample_context(stream) } -> std::same_as<typename E::Context>;
    { env.features(ctx) } -> std::convertible_to<const ContextFeatures&>;
    { env.reward(ctx, tau, stream) } -> std::convertible_to<double>;
};

struct GradientEstimate {
    std::vector<double> grad;  // ascent direction for the expected reward
    BaselineKind kind = BaselineKind::None;
    std::size_t contexts = 0;
    std::vector<std::size_t> rollouts;  // K_c
    std::uint64_t seed = 0;
    double mean_reward = 0.0;
};

struct GradientConfig {
    BaselineKind kind = BaselineKind::JamesStein;
    std::size_t rollouts = 2;  // K_c, equal across contexts
    BaselineOptions baseline;
    std::size_t threads = 1;
};

struct AdamWConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;

    explicit OptimizerState(std::size_t parameters = 0) : first_moment(parameters), second_moment(parameters) {}
};

struct TrainerConfig {
    BaselineKind kind = BaselineKind::JamesStein;
    std::size_t contexts = 16;  // B
    std::size_t rollouts = 2;   // K
    double learning_rate = 1e-2;
    double weight_decay = 1e-4;
    double grad_clip_norm = 1.0;
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    BaselineOptions baseline;
};

/// Throws ConfigError when the configuration violates its invariants.
void validate(const TrainerConfig& config);

struct TrainResult {
    PolicyParams params;
    std::vector<double> reward_trace;  // batch mean reward per iteration
};

/// Scales g to norm max_norm when its norm exceeds it.
std::vector<double> clip_gradient(std::vector<double> grad, double max_norm);

/// One AdamW step on a loss gradient (descent). Decoupled weight decay
/// theta <- theta - lr * wd * theta is applied before the moment update.
void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> loss_grad,
                    const AdamWConfig& config);

/// Pairwise (cascade) sum of equally sized vectors, in index order.
std::vector<double> pairwise_sum(std::span<const std::vector<double>> terms);

/// g = sum_{c,i} (r - b) / (B K_c) * grad log pi(tau^(c,i) | ctx_c).
///
/// Rollout (c, i) draws from stream.child(c).child(i), so the result does not
/// depend on evaluation order or thread count.
template <RewardEnvironment Env>
GradientEstimate estimate_gradient(const PolicyParams& params, std::span<const typename Env::Context> contexts,
                                   const Env& env, const GradientConfig& config, const RandomStream& stream) {
    if (contexts.empty()) throw InsufficientContextsError("estimate_gradient: no contexts");
    if (config.rollouts < 1) throw InsufficientRolloutsError("estimate_gradient: need at least one rollout");
    if (params.allocation_dim() != env.allocation_dim()) {
        throw ShapeError("estimate_gradient: policy and environment disagree on allocation dimension");
    }
    const std::size_t B = contexts.size();
    const std::size_t K = config.rollouts;

    std::vector<PolicyForward> forwards(B);
    for (std::size_t c = 0; c < B; ++c) forwards[c] = policy_forward_cached(params, env.features(contexts[c]));

    RewardBatch batch;
    batch.rewards.assign(B, std::vector<double>(K, 0.0));
    std::vector<std::vector<double>> scores(B * K);
    parallel_for(B * K, config.threads, [&](std::size_t n) {
        const std::size_t c = n / K;
        const std::size_t i = n % K;
        RandomStream rollout = stream.child(c).child(i);
        const SimplexAllocation tau = sample_dirichlet(forwards[c].alpha.alpha, rollout);
        const double r = env.reward(contexts[c], tau, rollout);
        if (!std::isfinite(r)) throw RolloutError(c, i, "non-finite reward");
        batch.rewards[c][i] = r;
        scores[n] = policy_score(params, env.features(contexts[c]), forwards[c], tau);
    });

    const BaselineMatrix baseline = compute_baseline(batch, config.kind, config.baseline);
    const double inv_bk = 1.0 / static_cast<double>(B * K);
    for (std::size_t c = 0; c < B; ++c) {
        for (std::size_t i = 0; i < K; ++i) {
            const double weight = (batch.rewards[c][i] - baseline.values[c][i]) * inv_bk;
            for (double& s : scores[c * K + i]) s *= weight;
        }
    }

    GradientEstimate est;
    est.grad = pairwise_sum(scores);
    est.kind = config.kind;
    est.contexts = B;
    est.rollouts.assign(B, K);
    est.seed = stream.seed();
    est.mean_reward = batch.total() * inv_bk;
    return est;
}

/// Policy-gradient ascent on the environment's expected reward: per
/// iteration, sample B contexts, estimate the gradient with the configured
/// baseline, clip, and take an AdamW step.
template <RewardEnvironment Env>
TrainResult train(const TrainerConfig& config, const Env& env, PolicyParams initial) {
    validate(config);
    TrainResult result{std::move(initial), {}};
    PolicyParams& params = result.params;
    OptimizerState state(params.parameter_count());
    const AdamWConfig adam{config.learning_rate, config.weight_decay};
    const GradientConfig grad_config{config.kind, config.rollouts, config.baseline, config.threads};
    result.reward_trace.reserve(config.iterations);

    for (std::size_t it = 0; it < config.iterations; ++it) {
        const RandomStream iteration(config.seed, {it});
        std::vector<typename Env::Context> contexts;
        contexts.reserve(config.contexts);
        const RandomStream context_root = iteration.child(0);
        for (std::size_t c = 0; c < config.contexts; ++c) {
            RandomStream cs = context_root.child(c);
            contexts.push_back(env.sample_context(cs));
        }
        GradientEstimate est = estimate_gradient<Env>(params, contexts, env, grad_config, iteration.child(1));
        result.reward_trace.push_back(est.mean_reward);

        std::vector<double> g = clip_gradient(std::move(est.grad), config.grad_clip_norm);
        for (double& v : g) v = -v;  // ascent on reward == descent on its negation
        optimizer_step(state, params.flat(), g, adam);
        params.project();
        for (double v : params.flat()) {
            if (!std::isfinite(v)) throw Error("training diverged: non-finite parameter at iteration " + std::to_string(it));
        }
    }
    return result;
}

}  // namespace resched
