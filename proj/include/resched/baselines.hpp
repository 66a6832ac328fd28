#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace resched {

/// Rewards r^(c,i) for B contexts with K_c rollouts each (ragged).
struct RewardBatch {
    std::vector<std::vector<double>> rewards;

    std::size_t contexts() const noexcept { return rewards.size(); }
    std::size_t total_rollouts() const noexcept;
    double total() const noexcept;
};

/// Throws InsufficientRolloutsError / DomainError when the batch is empty,
/// has a context with fewer than `min_rollouts`, or holds non-finite values.
void validate(const RewardBatch& batch, std::size_t min_rollouts = 2);

enum class BaselineKind { None, Rloo, Xctx, JamesStein };

std::string_view to_string(BaselineKind kind) noexcept;
/// Accepts "none", "rloo", "xctx", "js"; throws ConfigError otherwise.
BaselineKind parse_baseline_kind(std::string_view name);

/// Baseline values with the same ragged shape as the reward batch.
struct BaselineMatrix {
    std::vector<std::vector<double>> values;
    BaselineKind kind = BaselineKind::None;
};

/// Anchor b_xctx^(c,.) used by the between-context variance estimate.
enum class XctxAnchor {
    PerSampleMean,    // mean over i of the per-rollout leave-one-out values
    LeaveContextOut,  // mean of all rewards outside context c
};

/// Within-context variance estimator.
enum class WithinVariance {
    // sum_c ((K_c-1)/K_c)^2 sum_i (r - b_rloo)^2 / sum_c (K_c - 1): the pooled
    // within-context variance, unbiased for sigma^2.
    Pooled,
    // sum_c sum_i (r - b_rloo)^2 / sum_c (K_c - 1): expectation
    // sigma^2 K^2/(K-1)^2 for equal K.
    LeaveOneOutDispersion,
};

/// Which rewards feed the shrinkage weight used at (c, i).
enum class ShrinkageScope {
    // alpha_c recomputed with (c, i) removed, so b_js^(c,i) is exactly
    // independent of r^(c,i) and the gradient stays unbiased.
    LeaveOneOut,
    // One alpha_c per context from the whole batch. r^(c,i) leaks into
    // b_js^(c,i) through the variance components, a bias of order 1/(BK).
    FullBatch,
};

struct BaselineOptions {
    XctxAnchor xctx_anchor = XctxAnchor::PerSampleMean;
    WithinVariance within = WithinVariance::Pooled;
    ShrinkageScope scope = ShrinkageScope::LeaveOneOut;
};

struct VarianceComponents {
    double sigma2_hat = 0.0;  // within-context
    double delta2_hat = 0.0;  // between-context, clamped at 0
};

struct ShrinkageWeights {
    std::vector<double> alpha_hat;  // one per context, each in [0, 1]
};

/// b^(c,i) = mean of the other rewards in context c.
BaselineMatrix rloo_baseline(const RewardBatch& batch);

/// b^(c,i) = mean of every other reward in the batch.
BaselineMatrix xctx_baseline(const RewardBatch& batch);

/// Zero baseline with the batch's shape.
BaselineMatrix zero_baseline(const RewardBatch& batch);

/// Method-of-moments (sigma^2, delta^2). Requires B >= 2 and K_c >= 1 with at
/// least one K_c >= 2; a single-rollout context adds nothing to sigma^2 but
/// still enters the between-context spread.
VarianceComponents estimate_variance_components(const RewardBatch& batch, const BaselineOptions& options = {});

/// Shrinkage weight for a context whose leave-one-out mean averages
/// `others` = K_c - 1 rewards.
double shrinkage_weight(const VarianceComponents& vc, std::size_t others) noexcept;

/// alpha_c = (s2/(K_c-1)) / (s2/(K_c-1) + d2), with 0/0 defined as 0.
ShrinkageWeights shrinkage_coefficients(const RewardBatch& batch, const VarianceComponents& vc);

/// Full James-Stein evaluation with its intermediate estimates.
struct JamesSteinBaseline {
    BaselineMatrix baseline;
    VarianceComponents components;  // full-batch estimates
    ShrinkageWeights weights;       // full-batch alpha_c
    /// Weight actually applied at (c, i); equals weights.alpha_hat[c] under FullBatch.
    std::vector<std::vector<double>> applied_weights;
    /// Set when B < 3, where the MSE improvement guarantee does not apply.
    bool few_contexts = false;
};

/// b_js = (1 - alpha_c) b_rloo + alpha_c b_xctx, both excluding (c, i).
JamesSteinBaseline js_baseline_detailed(const RewardBatch& batch, const BaselineOptions& options = {});
BaselineMatrix js_baseline(const RewardBatch& batch, const BaselineOptions& options = {});

/// Dispatch on kind. None yields zeros and accepts K_c = 1.
BaselineMatrix compute_baseline(const RewardBatch& batch, BaselineKind kind, const BaselineOptions& options = {});

/// Plug-in variance-optimal scalar baseline sum r_k |g_k|^2 / sum |g_k|^2.
double optimal_baseline_oracle(std::span<const double> rewards, std::span<const std::vector<double>> scores);

}  // namespace resched
