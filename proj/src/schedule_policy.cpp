#include "resched/schedule_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "resched/errors.hpp"
#include "resched/special_math.hpp"

namespace resched {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
    }
}

double clamped_log(double tau) { return std::max(std::log(tau), kMinLogTau); }

}  // namespace

double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Schedule allocation_to_schedule(const SimplexAllocation& tau) {
    // Suffix sums: t_l = sum_{j>l} tau_j, which equals 1 - sum_{j<=l} tau_j on
    // the simplex and keeps every timestep positive with t_L = tau_{L+1} exactly.
    const auto t = tau.tau();
    const std::size_t steps = t.size() - 1;
    Schedule schedule;
    schedule.timesteps.resize(steps);
    double suffix = 0.0;
    for (std::size_t l = steps; l-- > 0;) {
        suffix += t[l + 1];
        schedule.timesteps[l] = suffix;
    }
    schedule.stopping_margin = t[steps];
    return schedule;
}

std::vector<double> schedule_to_intervals(const Schedule& schedule) {
    std::vector<double> tau;
    tau.reserve(schedule.timesteps.size() + 1);
    double prev = 1.0;
    for (double t : schedule.timesteps) {
        tau.push_back(prev - t);
        prev = t;
    }
    tau.push_back(prev);
    return tau;
}

double DirichletParams::total() const noexcept { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

void validate(const DirichletParams& params) {
    if (params.alpha.size() < 2) throw DomainError("dirichlet params need at least 2 components");
    for (double a : params.alpha) {
        if (!std::isfinite(a) || a < kAlphaOffset) {
            throw DomainError("dirichlet concentration below floor or non-finite");
        }
    }
}

double dirichlet_log_prob(const SimplexAllocation& tau, const DirichletParams& alpha) {
    require_same_size(tau.size(), alpha.size(), "dirichlet_log_prob");
    double result = log_gamma(alpha.total());
    for (std::size_t j = 0; j < tau.size(); ++j) {
        result += (alpha.alpha[j] - 1.0) * clamped_log(tau[j]) - log_gamma(alpha.alpha[j]);
    }
    return result;
}

std::vector<double> score_wrt_alpha(const SimplexAllocation& tau, const DirichletParams& alpha) {
    require_same_size(tau.size(), alpha.size(), "score_wrt_alpha");
    const double psi_total = digamma(alpha.total());
    std::vector<double> score(tau.size());
    for (std::size_t j = 0; j < tau.size(); ++j) {
        score[j] = psi_total - digamma(alpha.alpha[j]) + clamped_log(tau[j]);
    }
    return score;
}

SimplexAllocation dirichlet_mean(const DirichletParams& alpha) {
    const double total = alpha.total();
    std::vector<double> mean(alpha.alpha.size());
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = alpha.alpha[j] / total;
    return SimplexAllocation(std::move(mean));
}

// ---------------------------------------------------------------------------
// FeatureNetPolicy

FeatureNetPolicy::FeatureNetPolicy(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim)
    : FeatureNetPolicy(input_dim, hidden_dim, output_dim,
                       std::vector<double>(parameter_count(input_dim, hidden_dim, output_dim), 0.0)) {}

FeatureNetPolicy::FeatureNetPolicy(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                                   std::vector<double> weights)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), output_dim_(output_dim), weights_(std::move(weights)) {
    if (input_dim == 0 || hidden_dim == 0 || output_dim < 2) {
        throw ShapeError("feature net needs input >= 1, hidden >= 1, output >= 2");
    }
    require_same_size(weights_.size(), parameter_count(input_dim, hidden_dim, output_dim), "feature net weights");
}

FeatureNetPolicy FeatureNetPolicy::random_init(std::size_t input_dim, std::size_t hidden_dim,
                                               std::size_t output_dim, RandomStream& stream) {
    FeatureNetPolicy net(input_dim, hidden_dim, output_dim);
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double scale2 = 0.01 / std::sqrt(static_cast<double>(hidden_dim));
    auto w = net.weights();
    const std::size_t n1 = hidden_dim * input_dim;
    const std::size_t w2_begin = n1 + hidden_dim;
    for (std::size_t k = 0; k < n1; ++k) w[k] = scale1 * stream.normal();
    for (std::size_t k = 0; k < output_dim * hidden_dim; ++k) w[w2_begin + k] = scale2 * stream.normal();
    return net;
}

std::size_t FeatureNetPolicy::parameter_count(std::size_t input_dim, std::size_t hidden_dim,
                                              std::size_t output_dim) noexcept {
    return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
}

std::span<const double> FeatureNetPolicy::w1() const noexcept {
    return std::span<const double>(weights_).subspan(0, hidden_dim_ * input_dim_);
}
std::span<const double> FeatureNetPolicy::b1() const noexcept {
    return std::span<const double>(weights_).subspan(hidden_dim_ * input_dim_, hidden_dim_);
}
std::span<const double> FeatureNetPolicy::w2() const noexcept {
    return std::span<const double>(weights_).subspan(hidden_dim_ * (input_dim_ + 1), output_dim_ * hidden_dim_);
}
std::span<const double> FeatureNetPolicy::b2() const noexcept {
    return std::span<const double>(weights_).subspan(hidden_dim_ * (input_dim_ + 1 + output_dim_), output_dim_);
}

// ---------------------------------------------------------------------------
// PolicyParams

PolicyParams::PolicyParams(AnalyticPolicy policy) : policy_(std::move(policy)) {
    validate(std::get<AnalyticPolicy>(policy_).params);
}

PolicyParams::PolicyParams(FeatureNetPolicy policy) : policy_(std::move(policy)) {}

PolicyParams::Variant PolicyParams::variant() const noexcept {
    return std::holds_alternative<AnalyticPolicy>(policy_) ? Variant::Analytic : Variant::FeatureNet;
}

const AnalyticPolicy& PolicyParams::analytic() const { return std::get<AnalyticPolicy>(policy_); }
const FeatureNetPolicy& PolicyParams::feature_net() const { return std::get<FeatureNetPolicy>(policy_); }

std::size_t PolicyParams::allocation_dim() const noexcept {
    if (const auto* a = std::get_if<AnalyticPolicy>(&policy_)) return a->params.size();
    return std::get<FeatureNetPolicy>(policy_).output_dim();
}

std::size_t PolicyParams::parameter_count() const noexcept { return flat().size(); }

std::span<const double> PolicyParams::flat() const noexcept {
    if (const auto* a = std::get_if<AnalyticPolicy>(&policy_)) return a->params.alpha;
    return std::get<FeatureNetPolicy>(policy_).weights();
}

std::span<double> PolicyParams::flat() noexcept {
    if (auto* a = std::get_if<AnalyticPolicy>(&policy_)) return a->params.alpha;
    return std::get<FeatureNetPolicy>(policy_).weights();
}

void PolicyParams::project() {
    if (auto* a = std::get_if<AnalyticPolicy>(&policy_)) {
        for (double& v : a->params.alpha) v = std::max(v, kAlphaOffset);
    }
}

// ---------------------------------------------------------------------------
// Forward / score

PolicyForward policy_forward_cached(const PolicyParams& params, const ContextFeatures& ctx) {
    PolicyForward out;
    if (params.is_analytic()) {
        out.alpha = params.analytic().params;
        return out;
    }
    const FeatureNetPolicy& net = params.feature_net();
    require_same_size(ctx.size(), net.input_dim(), "policy_forward");
    const std::size_t in = net.input_dim();
    const std::size_t hid = net.hidden_dim();
    const std::size_t outd = net.output_dim();
    const auto w1 = net.w1();
    const auto b1 = net.b1();
    const auto w2 = net.w2();
    const auto b2 = net.b2();

    out.hidden.resize(hid);
    for (std::size_t h = 0; h < hid; ++h) {
        double acc = b1[h];
        for (std::size_t k = 0; k < in; ++k) acc += w1[h * in + k] * ctx.values[k];
        out.hidden[h] = std::tanh(acc);
    }
    out.preactivation.resize(outd);
    out.alpha.alpha.resize(outd);
    for (std::size_t o = 0; o < outd; ++o) {
        double acc = b2[o];
        for (std::size_t h = 0; h < hid; ++h) acc += w2[o * hid + h] * out.hidden[h];
        out.preactivation[o] = acc;
        out.alpha.alpha[o] = softplus(acc) + kAlphaOffset;
    }
    return out;
}

DirichletParams policy_forward(const PolicyParams& params, const ContextFeatures& ctx) {
    return policy_forward_cached(params, ctx).alpha;
}

std::vector<double> policy_score(const PolicyParams& params, const ContextFeatures& ctx,
                                 const PolicyForward& forward, const SimplexAllocation& tau) {
    std::vector<double> d_alpha = score_wrt_alpha(tau, forward.alpha);
    if (params.is_analytic()) return d_alpha;

    const FeatureNetPolicy& net = params.feature_net();
    require_same_size(ctx.size(), net.input_dim(), "policy_score");
    const std::size_t in = net.input_dim();
    const std::size_t hid = net.hidden_dim();
    const std::size_t outd = net.output_dim();
    const auto w2 = net.w2();

    std::vector<double> grad(net.weights().size(), 0.0);
    const std::size_t off_b1 = hid * in;
    const std::size_t off_w2 = off_b1 + hid;
    const std::size_t off_b2 = off_w2 + outd * hid;

    std::vector<double> d_hidden(hid, 0.0);
    for (std::size_t o = 0; o < outd; ++o) {
        const double dz = d_alpha[o] * sigmoid(forward.preactivation[o]);
        grad[off_b2 + o] = dz;
        for (std::size_t h = 0; h < hid; ++h) {
            grad[off_w2 + o * hid + h] = dz * forward.hidden[h];
            d_hidden[h] += dz * w2[o * hid + h];
        }
    }
    for (std::size_t h = 0; h < hid; ++h) {
        const double da = d_hidden[h] * (1.0 - forward.hidden[h] * forward.hidden[h]);
        grad[off_b1 + h] = da;
        for (std::size_t k = 0; k < in; ++k) grad[h * in + k] = da * ctx.values[k];
    }
    return grad;
}

std::vector<double> policy_score(const PolicyParams& params, const ContextFeatures& ctx,
                                 const SimplexAllocation& tau) {
    return policy_score(params, ctx, policy_forward_cached(params, ctx), tau);
}

}  // namespace resched
