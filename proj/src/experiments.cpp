#include "resched/experiments.hpp"

#include <cmath>
#include <string>

#include "resched/errors.hpp"
#include "resched/parallel.hpp"

namespace resched {

namespace {

// Stream tags, kept far from the iteration indices used by train().
constexpr std::uint64_t kHeldOutTag = 0x686f6c646f7574ULL;
constexpr std::uint64_t kInitTag = 0x696e6974ULL;

double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

std::string_view to_string(PolicyVariant variant) noexcept {
    return variant == PolicyVariant::Analytic ? "analytic" : "feature_net";
}

PolicyVariant parse_policy_variant(std::string_view name) {
    if (name == "analytic") return PolicyVariant::Analytic;
    if (name == "feature_net") return PolicyVariant::FeatureNet;
    throw ConfigError("unknown policy variant '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& config) {
    if (config.threads < 1) throw ConfigError("threads must be >= 1");
    validate(config.bench);

    const TrainSection& t = config.train;
    if (t.horizons.empty()) throw ConfigError("train: horizons must be non-empty");
    for (std::size_t L : t.horizons) {
        if (L < 1) throw ConfigError("train: horizons must be >= 1");
    }
    if (t.baselines.empty()) throw ConfigError("train: baselines must be non-empty");
    for (BaselineKind kind : t.baselines) {
        TrainerConfig tc;
        tc.kind = kind;
        tc.contexts = t.contexts;
        tc.rollouts = t.rollouts;
        tc.learning_rate = t.learning_rate;
        tc.weight_decay = t.weight_decay;
        tc.grad_clip_norm = t.grad_clip_norm;
        validate(tc);
    }
    if (t.policy == PolicyVariant::FeatureNet && t.hidden < 1) throw ConfigError("train: hidden must be >= 1");
    if (!(t.initial_concentration > kAlphaOffset) || !std::isfinite(t.initial_concentration)) {
        throw ConfigError("train: initial_concentration must exceed the concentration floor");
    }

    const SamplerSection& s = config.sampler;
    const ContextGeneratorConfig& g = s.generator;
    if (g.min_components < 1 || g.max_components < g.min_components || g.max_components > kMaxComponents) {
        throw ConfigError("sampler: component range must lie in [1, 4]");
    }
    if (!(g.min_stddev > 0.0) || !(g.max_stddev >= g.min_stddev) || !(g.mean_range >= 0.0) ||
        !std::isfinite(g.max_stddev) || !std::isfinite(g.mean_range)) {
        throw ConfigError("sampler: invalid stddev or mean range");
    }
    if (s.reward.reference_steps < 2) throw ConfigError("sampler: reference_steps must be >= 2");
    if (s.eval_contexts < 1) throw ConfigError("sampler: eval_contexts must be >= 1");
}

ToyExperimentConfig toy_experiment(const ExperimentConfig& config, std::size_t steps, BaselineKind kind) {
    ToyExperimentConfig out;
    out.steps = steps;
    out.kind = kind;
    out.train = config.train;
    out.sampler = config.sampler;
    out.threads = config.threads;
    return out;
}

std::vector<ToySamplerEnv::Context> held_out_contexts(const ToySamplerEnv& env, const SamplerSection& sampler,
                                                      std::size_t threads) {
    std::vector<ToySamplerEnv::Context> out(sampler.eval_contexts);
    const RandomStream root(sampler.eval_seed, {kHeldOutTag});
    parallel_for(out.size(), threads, [&](std::size_t c) {
        RandomStream s = root.child(c);
        out[c] = env.sample_context(s);
    });
    return out;
}

PolicyParams initial_policy(const TrainSection& train, std::size_t steps, RandomStream& stream) {
    const std::size_t dim = steps + 1;
    const double alpha0 = train.initial_concentration;
    if (train.policy == PolicyVariant::Analytic) {
        return AnalyticPolicy{DirichletParams{std::vector<double>(dim, alpha0)}};
    }
    FeatureNetPolicy net = FeatureNetPolicy::random_init(kContextFeatureDim, train.hidden, dim, stream);
    auto w = net.weights();
    const double bias = inverse_softplus(alpha0 - kAlphaOffset);
    for (std::size_t j = w.size() - dim; j < w.size(); ++j) w[j] = bias;
    return net;
}

Schedule mean_schedule(const PolicyParams& params, const ContextFeatures& features) {
    return allocation_to_schedule(dirichlet_mean(policy_forward(params, features)));
}

ScheduleEvaluation evaluate_policy(const PolicyParams& params, const ToySamplerEnv& env,
                                   const std::vector<ToySamplerEnv::Context>& contexts, std::size_t threads) {
    if (contexts.empty()) throw InsufficientContextsError("evaluate_policy: no contexts");
    std::vector<double> learned(contexts.size());
    std::vector<double> uniform(contexts.size());
    const Schedule uniform_sched = uniform_schedule(env.steps());
    parallel_for(contexts.size(), threads, [&](std::size_t c) {
        const auto& ctx = contexts[c];
        learned[c] = terminal_reward(mean_schedule(params, ctx.features), ctx.sampler, ctx.reference);
        uniform[c] = terminal_reward(uniform_sched, ctx.sampler, ctx.reference);
    });
    ScheduleEvaluation ev;
    ev.contexts = contexts.size();
    for (std::size_t c = 0; c < contexts.size(); ++c) {
        ev.learned_mean_reward += learned[c];
        ev.uniform_mean_reward += uniform[c];
        if (learned[c] > uniform[c]) ++ev.wins;
    }
    ev.learned_mean_reward /= static_cast<double>(contexts.size());
    ev.uniform_mean_reward /= static_cast<double>(contexts.size());
    const double scale = std::abs(ev.uniform_mean_reward);
    ev.relative_gain = scale > 0.0 ? (ev.learned_mean_reward - ev.uniform_mean_reward) / scale : 0.0;
    return ev;
}

ToyRunResult run_toy_experiment(const ToyExperimentConfig& config, std::uint64_t seed) {
    const ToySamplerEnv env(config.steps, config.sampler.generator, config.sampler.reward);
    TrainerConfig tc;
    tc.kind = config.kind;
    tc.contexts = config.train.contexts;
    tc.rollouts = config.train.rollouts;
    tc.learning_rate = config.train.learning_rate;
    tc.weight_decay = config.train.weight_decay;
    tc.grad_clip_norm = config.train.grad_clip_norm;
    tc.iterations = config.train.iterations;
    tc.seed = seed;
    tc.threads = config.threads;
    tc.baseline = config.train.baseline_options;

    RandomStream init(seed, {kInitTag});
    ToyRunResult out{train(tc, env, initial_policy(config.train, config.steps, init)), {}};
    out.evaluation = evaluate_policy(out.training.params, env, held_out_contexts(env, config.sampler, config.threads),
                                     config.threads);
    return out;
}

}  // namespace resched
