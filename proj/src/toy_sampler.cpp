#include "resched/toy_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "resched/errors.hpp"
#include "resched/special_math.hpp"

namespace resched {

void validate(const GaussianMixture& mixture) {
    const std::size_t n = mixture.components();
    if (n == 0 || mixture.means.size() != n || mixture.stddevs.size() != n) {
        throw DomainError("gaussian mixture: component arrays must be non-empty and equal length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!(mixture.weights[k] > 0.0) || !(mixture.stddevs[k] > 0.0) || !std::isfinite(mixture.means[k])) {
            throw DomainError("gaussian mixture: weights and stddevs must be positive, means finite");
        }
        sum += mixture.weights[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("gaussian mixture: weights must sum to 1");
}

namespace {

struct Component {
    double log_weight;
    double mean;
    double var;  // s^2
};

std::vector<Component> prepare(const GaussianMixture& mixture) {
    std::vector<Component> out(mixture.components());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = {std::log(mixture.weights[k]), mixture.means[k], mixture.stddevs[k] * mixture.stddevs[k]};
    }
    return out;
}

// Component log-densities of x_t (up to the shared 2 pi factor) and conditional velocities.
template <class Fn>
void for_each_component(double x, double t, const std::vector<Component>& comps, Fn&& fn) {
    const double a = 1.0 - t;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const Component& c = comps[k];
        const double var = a * a * c.var + t * t;
        const double centered = x - a * c.mean;
        const double log_density = c.log_weight - 0.5 * std::log(var) - 0.5 * centered * centered / var;
        const double velocity = (t - a * c.var) * centered / var - c.mean;
        fn(k, log_density, velocity);
    }
}

double velocity(double x, double t, const std::vector<Component>& comps) {
    // Streaming log-sum-exp: rescale the running sums whenever the max grows.
    double max_lp = -std::numeric_limits<double>::infinity();
    double norm = 0.0;
    double acc = 0.0;
    for_each_component(x, t, comps, [&](std::size_t, double lp, double v) {
        if (lp > max_lp) {
            const double rescale = std::exp(max_lp - lp);
            norm *= rescale;
            acc *= rescale;
            max_lp = lp;
        }
        const double w = std::exp(lp - max_lp);
        norm += w;
        acc += w * v;
    });
    return acc / norm;
}

}  // namespace

std::vector<double> responsibilities(double x, double t, const GaussianMixture& mixture) {
    if (!std::isfinite(x)) throw DomainError("responsibilities: non-finite state");
    std::vector<double> logp(mixture.components());
    for_each_component(x, t, prepare(mixture), [&](std::size_t k, double lp, double) { logp[k] = lp; });
    const double max_lp = *std::max_element(logp.begin(), logp.end());
    double sum = 0.0;
    for (double& lp : logp) {
        lp = std::exp(lp - max_lp);
        sum += lp;
    }
    for (double& lp : logp) lp /= sum;
    return logp;
}

double marginal_velocity(double x, double t, const GaussianMixture& mixture) {
    if (!std::isfinite(x)) throw DomainError("marginal_velocity: non-finite state");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("marginal_velocity: t outside [0, 1]");
    return velocity(x, t, prepare(mixture));
}

double integrate(const Schedule& schedule, const SamplerContext& ctx) {
    const std::vector<Component> comps = prepare(ctx.mixture);
    double x = ctx.initial_noise;
    double t = 1.0;
    for (double next : schedule.timesteps) {
        x += (next - t) * velocity(x, t, comps);
        t = next;
    }
    x += (0.0 - t) * velocity(x, t, comps);
    return x;
}

Schedule uniform_schedule(std::size_t steps) {
    Schedule s;
    s.timesteps.resize(steps);
    const double h = 1.0 / static_cast<double>(steps + 1);
    for (std::size_t l = 0; l < steps; ++l) s.timesteps[l] = 1.0 - static_cast<double>(l + 1) * h;
    s.stopping_margin = steps > 0 ? s.timesteps.back() : 1.0;
    return s;
}

double integrate_uniform(std::size_t steps, const SamplerContext& ctx) {
    if (steps == 0) throw DomainError("integrate_uniform: need at least one step");
    return integrate(uniform_schedule(steps - 1), ctx);
}

double single_gaussian_endpoint(const SamplerContext& ctx) {
    if (ctx.mixture.components() != 1) throw DomainError("closed-form endpoint needs a single component");
    return ctx.mixture.means[0] + ctx.mixture.stddevs[0] * ctx.initial_noise;
}

double terminal_reward(const Schedule& schedule, const SamplerContext& ctx, double reference_endpoint) {
    return -std::abs(integrate(schedule, ctx) - reference_endpoint);
}

double terminal_reward(const Schedule& schedule, const SamplerContext& ctx, const RewardSpec& spec) {
    return terminal_reward(schedule, ctx, integrate_uniform(spec.reference_steps, ctx));
}

SamplerContext sample_context(const ContextGeneratorConfig& config, RandomStream& stream) {
    if (config.min_components < 1 || config.max_components < config.min_components ||
        config.max_components > kMaxComponents) {
        throw DomainError("context generator: component range must lie in [1, 4]");
    }
    if (!(config.min_stddev > 0.0) || config.max_stddev < config.min_stddev || !(config.mean_range >= 0.0)) {
        throw DomainError("context generator: invalid stddev or mean range");
    }
    const std::size_t choices = config.max_components - config.min_components + 1;
    const std::size_t n =
        config.min_components + static_cast<std::size_t>(stream.uniform() * static_cast<double>(choices));

    SamplerContext ctx;
    if (n == 1) {
        ctx.mixture.weights = {1.0};
    } else {
        const SimplexAllocation w = sample_dirichlet(std::vector<double>(n, 1.0), stream);
        ctx.mixture.weights.assign(w.tau().begin(), w.tau().end());
    }
    const double log_lo = std::log(config.min_stddev);
    const double log_hi = std::log(config.max_stddev);
    for (std::size_t k = 0; k < n; ++k) {
        ctx.mixture.means.push_back(config.mean_range * (2.0 * stream.uniform() - 1.0));
        ctx.mixture.stddevs.push_back(std::exp(log_lo + (log_hi - log_lo) * stream.uniform()));
    }
    ctx.initial_noise = stream.normal();
    return ctx;
}

ContextFeatures context_features(const SamplerContext& ctx) {
    const GaussianMixture& m = ctx.mixture;
    if (m.components() > kMaxComponents) throw ShapeError("context_features: too many mixture components");
    std::vector<std::size_t> order(m.components());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.means[a] < m.means[b]; });

    ContextFeatures f;
    f.values.assign(kContextFeatureDim, 0.0);
    for (std::size_t slot = 0; slot < kMaxComponents; ++slot) {
        if (slot < order.size()) {
            const std::size_t k = order[slot];
            f.values[slot] = m.means[k];
            f.values[kMaxComponents + slot] = std::log(m.weights[k]);
            f.values[2 * kMaxComponents + slot] = std::log(m.stddevs[k]);
        } else {
            f.values[kMaxComponents + slot] = -10.0;
        }
    }
    const double x = ctx.initial_noise;
    f.values[3 * kMaxComponents] = x;
    f.values[3 * kMaxComponents + 1] = std::abs(x);
    f.values[3 * kMaxComponents + 2] = x * x;
    return f;
}

ToySamplerEnv::ToySamplerEnv(std::size_t steps, ContextGeneratorConfig generator, RewardSpec reward)
    : steps_(steps), generator_(generator), reward_(reward) {
    if (steps == 0) throw DomainError("toy sampler needs at least one timestep");
    if (reward.reference_steps < 2) throw DomainError("reference needs at least two steps");
}

ToySamplerEnv::Context ToySamplerEnv::make_context(SamplerContext sampler) const {
    validate(sampler.mixture);
    Context ctx;
    ctx.features = context_features(sampler);
    ctx.reference = integrate_uniform(reward_.reference_steps, sampler);
    ctx.sampler = std::move(sampler);
    return ctx;
}

ToySamplerEnv::Context ToySamplerEnv::sample_context(RandomStream& stream) const {
    return make_context(resched::sample_context(generator_, stream));
}

double ToySamplerEnv::reward(const Context& ctx, const SimplexAllocation& tau, RandomStream& /*stream*/) const {
    if (tau.size() != allocation_dim()) throw ShapeError("toy sampler: allocation has wrong dimension");
    return terminal_reward(allocation_to_schedule(tau), ctx.sampler, ctx.reference);
}

}  // namespace resched
