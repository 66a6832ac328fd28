#include "resched/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace resched {

void validate(const TrainerConfig& config) {
    if (config.contexts < 1) throw ConfigError("trainer: contexts per batch must be >= 1");
    const bool leave_one_out = config.kind != BaselineKind::None;
    if (leave_one_out && config.rollouts < 2) throw ConfigError("trainer: leave-one-out baselines need K >= 2");
    if (config.rollouts < 1) throw ConfigError("trainer: rollouts per context must be >= 1");
    if (config.kind == BaselineKind::JamesStein && config.contexts < 2) {
        throw ConfigError("trainer: the James-Stein baseline needs B >= 2");
    }
    if (!(config.learning_rate > 0.0)) throw ConfigError("trainer: learning rate must be positive");
    if (!(config.weight_decay >= 0.0)) throw ConfigError("trainer: weight decay must be non-negative");
    if (!(config.grad_clip_norm > 0.0)) throw ConfigError("trainer: gradient clip norm must be positive");
}

std::vector<double> clip_gradient(std::vector<double> grad, double max_norm) {
    if (!(max_norm > 0.0)) throw DomainError("clip_gradient: max_norm must be positive");
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grad) g *= scale;
    }
    return grad;
}

void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> loss_grad,
                    const AdamWConfig& config) {
    if (params.size() != loss_grad.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ShapeError("optimizer_step: parameter, gradient and state sizes differ");
    }
    ++state.step;
    const double step = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, step);
    const double correction2 = 1.0 - std::pow(config.beta2, step);
    const double decay = 1.0 - config.learning_rate * config.weight_decay;
    for (std::size_t k = 0; k < params.size(); ++k) {
        params[k] *= decay;
        const double g = loss_grad[k];
        double& m = state.first_moment[k];
        double& v = state.second_moment[k];
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

namespace {

void pairwise_accumulate(std::span<const std::vector<double>> terms, std::vector<double>& out) {
    if (terms.size() == 1) {
        out = terms[0];
        return;
    }
    const std::size_t half = terms.size() / 2;
    std::vector<double> right;
    pairwise_accumulate(terms.first(half), out);
    pairwise_accumulate(terms.subspan(half), right);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += right[k];
}

}  // namespace

std::vector<double> pairwise_sum(std::span<const std::vector<double>> terms) {
    if (terms.empty()) return {};
    for (const auto& t : terms) {
        if (t.size() != terms[0].size()) throw ShapeError("pairwise_sum: terms differ in length");
    }
    std::vector<double> out;
    pairwise_accumulate(terms, out);
    return out;
}

}  // namespace resched
