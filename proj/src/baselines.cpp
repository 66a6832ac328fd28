#include "resched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "resched/errors.hpp"

namespace resched {

namespace {

// Per-context sufficient statistics.
struct ContextStats {
    double count = 0.0;
    double sum = 0.0;
    double sum_sq_dev = 0.0;  // sum_i (r_i - mean)^2

    double mean() const noexcept { return sum / count; }
};

std::vector<ContextStats> context_stats(const RewardBatch& batch) {
    std::vector<ContextStats> stats(batch.contexts());
    for (std::size_t c = 0; c < stats.size(); ++c) {
        const auto& row = batch.rewards[c];
        ContextStats& s = stats[c];
        s.count = static_cast<double>(row.size());
        s.sum = std::accumulate(row.begin(), row.end(), 0.0);
        const double mean = s.mean();
        for (double r : row) s.sum_sq_dev += (r - mean) * (r - mean);
    }
    return stats;
}

// Variance components from statistics; `replaced` (if non-null) stands in for
// context `replaced_index`.
VarianceComponents components_from_stats(const std::vector<ContextStats>& stats, const BaselineOptions& options,
                                         std::size_t replaced_index = 0, const ContextStats* replaced = nullptr) {
    const auto at = [&](std::size_t c) -> const ContextStats& {
        return (replaced != nullptr && c == replaced_index) ? *replaced : stats[c];
    };
    const std::size_t contexts = stats.size();
    double total = 0.0;
    double rollouts = 0.0;
    double dof = 0.0;
    double within = 0.0;
    for (std::size_t c = 0; c < contexts; ++c) {
        const ContextStats& s = at(c);
        total += s.sum;
        rollouts += s.count;
        if (s.count < 2.0) continue;
        dof += s.count - 1.0;
        if (options.within == WithinVariance::Pooled) {
            within += s.sum_sq_dev;
        } else {
            // sum_i (r - b_rloo)^2 = (K / (K - 1))^2 * sum_i (r - mean)^2
            const double scale = s.count / (s.count - 1.0);
            within += scale * scale * s.sum_sq_dev;
        }
    }
    if (dof <= 0.0) throw InsufficientRolloutsError("variance components need a context with at least 2 rollouts");

    VarianceComponents vc;
    vc.sigma2_hat = within / dof;

    double between = 0.0;
    for (std::size_t c = 0; c < contexts; ++c) {
        const ContextStats& s = at(c);
        const double mean = s.mean();
        const double anchor = options.xctx_anchor == XctxAnchor::PerSampleMean
                                  ? (total - mean) / (rollouts - 1.0)
                                  : (total - s.sum) / (rollouts - s.count);
        between += (mean - anchor) * (mean - anchor);
    }
    between /= static_cast<double>(contexts - 1);
    const double mean_rollouts = rollouts / static_cast<double>(contexts);
    vc.delta2_hat = std::max(0.0, between - vc.sigma2_hat / mean_rollouts);
    return vc;
}

BaselineMatrix shaped_like(const RewardBatch& batch, BaselineKind kind) {
    BaselineMatrix m;
    m.kind = kind;
    m.values.resize(batch.contexts());
    for (std::size_t c = 0; c < batch.contexts(); ++c) m.values[c].resize(batch.rewards[c].size());
    return m;
}

void require_contexts(const RewardBatch& batch, std::size_t min_contexts) {
    if (batch.contexts() < min_contexts) {
        throw InsufficientContextsError("need at least " + std::to_string(min_contexts) + " contexts, got " +
                                        std::to_string(batch.contexts()));
    }
}

}  // namespace

std::size_t RewardBatch::total_rollouts() const noexcept {
    std::size_t n = 0;
    for (const auto& row : rewards) n += row.size();
    return n;
}

double RewardBatch::total() const noexcept {
    double s = 0.0;
    for (const auto& row : rewards) s = std::accumulate(row.begin(), row.end(), s);
    return s;
}

void validate(const RewardBatch& batch, std::size_t min_rollouts) {
    if (batch.contexts() == 0) throw InsufficientContextsError("reward batch has no contexts");
    for (std::size_t c = 0; c < batch.contexts(); ++c) {
        const auto& row = batch.rewards[c];
        if (row.size() < min_rollouts) {
            throw InsufficientRolloutsError("context " + std::to_string(c) + " has " + std::to_string(row.size()) +
                                            " rollouts, need " + std::to_string(min_rollouts));
        }
        for (double r : row) {
            if (!std::isfinite(r)) throw DomainError("reward batch holds a non-finite value");
        }
    }
}

std::string_view to_string(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::None: return "none";
        case BaselineKind::Rloo: return "rloo";
        case BaselineKind::Xctx: return "xctx";
        case BaselineKind::JamesStein: return "js";
    }
    return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
    if (name == "none") return BaselineKind::None;
    if (name == "rloo") return BaselineKind::Rloo;
    if (name == "xctx") return BaselineKind::Xctx;
    if (name == "js") return BaselineKind::JamesStein;
    throw ConfigError("unknown baseline kind '" + std::string(name) + "'");
}

BaselineMatrix rloo_baseline(const RewardBatch& batch) {
    validate(batch, 2);
    BaselineMatrix m = shaped_like(batch, BaselineKind::Rloo);
    for (std::size_t c = 0; c < batch.contexts(); ++c) {
        const auto& row = batch.rewards[c];
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        const double others = static_cast<double>(row.size() - 1);
        for (std::size_t i = 0; i < row.size(); ++i) m.values[c][i] = (sum - row[i]) / others;
    }
    return m;
}

BaselineMatrix xctx_baseline(const RewardBatch& batch) {
    validate(batch, 1);
    const std::size_t n = batch.total_rollouts();
    if (n < 2) throw InsufficientRolloutsError("cross-context baseline needs at least 2 rollouts in the batch");
    const double total = batch.total();
    BaselineMatrix m = shaped_like(batch, BaselineKind::Xctx);
    for (std::size_t c = 0; c < batch.contexts(); ++c) {
        for (std::size_t i = 0; i < batch.rewards[c].size(); ++i) {
            m.values[c][i] = (total - batch.rewards[c][i]) / static_cast<double>(n - 1);
        }
    }
    return m;
}

BaselineMatrix zero_baseline(const RewardBatch& batch) {
    validate(batch, 1);
    return shaped_like(batch, BaselineKind::None);
}

VarianceComponents estimate_variance_components(const RewardBatch& batch, const BaselineOptions& options) {
    require_contexts(batch, 2);
    validate(batch, 1);
    return components_from_stats(context_stats(batch), options);
}

double shrinkage_weight(const VarianceComponents& vc, std::size_t others) noexcept {
    const double noise = vc.sigma2_hat / static_cast<double>(others);
    const double denom = noise + vc.delta2_hat;
    if (!(denom > 0.0)) return 0.0;
    return std::clamp(noise / denom, 0.0, 1.0);
}

ShrinkageWeights shrinkage_coefficients(const RewardBatch& batch, const VarianceComponents& vc) {
    validate(batch, 2);
    ShrinkageWeights w;
    w.alpha_hat.reserve(batch.contexts());
    for (const auto& row : batch.rewards) w.alpha_hat.push_back(shrinkage_weight(vc, row.size() - 1));
    return w;
}

JamesSteinBaseline js_baseline_detailed(const RewardBatch& batch, const BaselineOptions& options) {
    require_contexts(batch, 2);
    const BaselineMatrix rloo = rloo_baseline(batch);
    const BaselineMatrix xctx = xctx_baseline(batch);
    const std::vector<ContextStats> stats = context_stats(batch);

    JamesSteinBaseline js;
    js.components = components_from_stats(stats, options);
    js.weights = shrinkage_coefficients(batch, js.components);
    js.few_contexts = batch.contexts() < 3;
    js.baseline = shaped_like(batch, BaselineKind::JamesStein);
    js.applied_weights = js.baseline.values;

    for (std::size_t c = 0; c < batch.contexts(); ++c) {
        const auto& row = batch.rewards[c];
        for (std::size_t i = 0; i < row.size(); ++i) {
            double a = js.weights.alpha_hat[c];
            if (options.scope == ShrinkageScope::LeaveOneOut) {
                // Downdate context c by removing r^(c,i).
                const ContextStats& s = stats[c];
                const double dev = row[i] - s.mean();
                ContextStats reduced;
                reduced.count = s.count - 1.0;
                reduced.sum = s.sum - row[i];
                reduced.sum_sq_dev = std::max(0.0, s.sum_sq_dev - s.count / (s.count - 1.0) * dev * dev);
                a = shrinkage_weight(components_from_stats(stats, options, c, &reduced), row.size() - 1);
            }
            js.applied_weights[c][i] = a;
            js.baseline.values[c][i] = (1.0 - a) * rloo.values[c][i] + a * xctx.values[c][i];
        }
    }
    return js;
}

BaselineMatrix js_baseline(const RewardBatch& batch, const BaselineOptions& options) {
    return js_baseline_detailed(batch, options).baseline;
}

BaselineMatrix compute_baseline(const RewardBatch& batch, BaselineKind kind, const BaselineOptions& options) {
    switch (kind) {
        case BaselineKind::None: return zero_baseline(batch);
        case BaselineKind::Rloo: return rloo_baseline(batch);
        case BaselineKind::Xctx: return xctx_baseline(batch);
        case BaselineKind::JamesStein: return js_baseline(batch, options);
    }
    throw ConfigError("unhandled baseline kind");
}

double optimal_baseline_oracle(std::span<const double> rewards, std::span<const std::vector<double>> scores) {
    if (rewards.size() != scores.size()) throw ShapeError("optimal baseline: rewards and scores differ in length");
    if (rewards.size() < 2) throw InsufficientRolloutsError("optimal baseline needs at least 2 samples");
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < rewards.size(); ++k) {
        double w = 0.0;
        for (double g : scores[k]) w += g * g;
        weighted += rewards[k] * w;
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) throw DegenerateWeightsError("all score vectors are zero");
    return weighted / weight_sum;
}

}  // namespace resched
