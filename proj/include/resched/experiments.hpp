#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "resched/baselines.hpp"
#include "resched/schedule_policy.hpp"
#include "resched/synthetic_bench.hpp"
#include "resched/toy_sampler.hpp"
#include "resched/trainer.hpp"

namespace resched {

enum class PolicyVariant { Analytic, FeatureNet };

std::string_view to_string(PolicyVariant variant) noexcept;
/// Accepts "analytic" and "feature_net".
PolicyVariant parse_policy_variant(std::string_view name);

/// Sampler-side settings shared by train and eval.
struct SamplerSection {
    ContextGeneratorConfig generator;
    RewardSpec reward;
    std::size_t eval_contexts = 200;
    std::uint64_t eval_seed = 1;  // held-out contexts do not move with the training seed
};

struct TrainSection {
    std::vector<std::size_t> horizons{5, 40};
    std::vector<BaselineKind> baselines{BaselineKind::JamesStein};
    std::size_t contexts = 64;
    std::size_t rollouts = 2;
    double learning_rate = 1e-2;
    double weight_decay = 1e-4;
    double grad_clip_norm = 1.0;
    std::size_t iterations = 2000;
    PolicyVariant policy = PolicyVariant::FeatureNet;
    std::size_t hidden = 64;
    double initial_concentration = 4.0;  // alpha at init, all components
    BaselineOptions baseline_options;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t threads = 1;
    SweepConfig bench;
    TrainSection train;
    SamplerSection sampler;
};

/// Throws ConfigError on the first violated constraint.
void validate(const ExperimentConfig& config);

/// One (L, baseline) toy run.
struct ToyExperimentConfig {
    std::size_t steps = 5;
    BaselineKind kind = BaselineKind::JamesStein;
    TrainSection train;
    SamplerSection sampler;
    std::size_t threads = 1;
};

ToyExperimentConfig toy_experiment(const ExperimentConfig& config, std::size_t steps, BaselineKind kind);

struct ScheduleEvaluation {
    double learned_mean_reward = 0.0;
    double uniform_mean_reward = 0.0;
    double relative_gain = 0.0;  // (learned - uniform) / |uniform|
    std::size_t wins = 0;        // contexts where the learned schedule is strictly better
    std::size_t contexts = 0;
};

/// Held-out contexts, a function of (eval_seed, eval_contexts) only.
std::vector<ToySamplerEnv::Context> held_out_contexts(const ToySamplerEnv& env, const SamplerSection& sampler,
                                                      std::size_t threads = 1);

/// Untrained policy whose mean schedule is the uniform one.
PolicyParams initial_policy(const TrainSection& train, std::size_t steps, RandomStream& stream);

/// The deterministic schedule a policy commits to for a context: the
/// Dirichlet mean allocation.
Schedule mean_schedule(const PolicyParams& params, const ContextFeatures& features);

ScheduleEvaluation evaluate_policy(const PolicyParams& params, const ToySamplerEnv& env,
                                   const std::vector<ToySamplerEnv::Context>& contexts, std::size_t threads = 1);

struct ToyRunResult {
    TrainResult training;
    ScheduleEvaluation evaluation;
};

ToyRunResult run_toy_experiment(const ToyExperimentConfig& config, std::uint64_t seed);

}  // namespace resched
