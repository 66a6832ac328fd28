#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "resched/baselines.hpp"
#include "resched/errors.hpp"
#include "resched/random_stream.hpp"

using namespace resched;

namespace {

using Matrix = std::vector<std::vector<double>>;

// Naive oracles, written from the definitions with explicit loops.
Matrix naive_rloo(const Matrix& r) {
    Matrix out = r;
    for (std::size_t c = 0; c < r.size(); ++c) {
        for (std::size_t i = 0; i < r[c].size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < r[c].size(); ++j) {
                if (j != i) s += r[c][j];
            }
            out[c][i] = s / static_cast<double>(r[c].size() - 1);
        }
    }
    return out;
}

Matrix naive_xctx(const Matrix& r) {
    Matrix out = r;
    for (std::size_t c = 0; c < r.size(); ++c) {
        for (std::size_t i = 0; i < r[c].size(); ++i) {
            double s = 0.0;
            double n = 0.0;
            for (std::size_t d = 0; d < r.size(); ++d) {
                for (std::size_t j = 0; j < r[d].size(); ++j) {
                    if (d == c && j == i) continue;
                    s += r[d][j];
                    n += 1.0;
                }
            }
            out[c][i] = s / n;
        }
    }
    return out;
}

double row_mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

VarianceComponents naive_components(const Matrix& r, const BaselineOptions& o) {
    // single-rollout contexts contribute no within-context dispersion
    Matrix rl = r;
    for (std::size_t c = 0; c < r.size(); ++c) {
        if (r[c].size() > 1) rl[c] = naive_rloo(Matrix{r[c]})[0];
    }
    const Matrix xc = naive_xctx(r);
    double ss = 0.0, dof = 0.0, pooled = 0.0;
    double total = 0.0, n = 0.0;
    for (std::size_t c = 0; c < r.size(); ++c) {
        const double m = row_mean(r[c]);
        for (std::size_t i = 0; i < r[c].size(); ++i) {
            ss += (r[c][i] - rl[c][i]) * (r[c][i] - rl[c][i]);
            pooled += (r[c][i] - m) * (r[c][i] - m);
            total += r[c][i];
            n += 1.0;
        }
        dof += static_cast<double>(r[c].size() - 1);
    }
    VarianceComponents vc;
    vc.sigma2_hat = (o.within == WithinVariance::Pooled ? pooled : ss) / dof;
    const double B = static_cast<double>(r.size());
    double spread = 0.0;
    for (std::size_t c = 0; c < r.size(); ++c) {
        double anchor = 0.0;
        if (o.xctx_anchor == XctxAnchor::PerSampleMean) {
            anchor = row_mean(xc[c]);
        } else {
            double s = 0.0;
            for (double v : r[c]) s += v;
            anchor = (total - s) / (n - static_cast<double>(r[c].size()));
        }
        spread += (row_mean(r[c]) - anchor) * (row_mean(r[c]) - anchor);
    }
    vc.delta2_hat = std::max(0.0, spread / (B - 1.0) - vc.sigma2_hat / (n / B));
    return vc;
}

Matrix random_effects(std::size_t B, std::size_t K, double sigma, double delta, RandomStream& s,
                      std::vector<double>* mu = nullptr) {
    Matrix r(B, std::vector<double>(K));
    if (mu) mu->assign(B, 0.0);
    for (std::size_t c = 0; c < B; ++c) {
        const double m = 3.0 + delta * s.normal();
        if (mu) (*mu)[c] = m;
        for (double& v : r[c]) v = m + sigma * s.normal();
    }
    return r;
}

Matrix ragged(RandomStream& s, std::size_t B) {
    Matrix r(B);
    for (std::size_t c = 0; c < B; ++c) {
        r[c].resize(2 + static_cast<std::size_t>(s.uniform() * 5));
        const double m = 2.0 * s.normal();
        for (double& v : r[c]) v = m + std::exp(s.normal()) * s.normal();
    }
    return r;
}

void require_close(const Matrix& a, const Matrix& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c) {
        REQUIRE(a[c].size() == b[c].size());
        for (std::size_t i = 0; i < a[c].size(); ++i) REQUIRE(std::abs(a[c][i] - b[c][i]) <= tol);
    }
}

const BaselineOptions kAllOptions[] = {
    {XctxAnchor::PerSampleMean, WithinVariance::Pooled, ShrinkageScope::FullBatch},
    {XctxAnchor::LeaveContextOut, WithinVariance::Pooled, ShrinkageScope::FullBatch},
    {XctxAnchor::PerSampleMean, WithinVariance::LeaveOneOutDispersion, ShrinkageScope::FullBatch},
    {XctxAnchor::LeaveContextOut, WithinVariance::LeaveOneOutDispersion, ShrinkageScope::FullBatch},
};

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("rloo examples") {
    const RewardBatch b{{{1, 2, 3}, {5, 5}, {4, 7}}};
    const auto m = rloo_baseline(b).values;
    CHECK(m[0] == std::vector<double>{2.5, 2.0, 1.5});
    CHECK(m[1] == std::vector<double>{5.0, 5.0});
    CHECK(m[2] == std::vector<double>{7.0, 4.0});
    CHECK_THROWS_AS(rloo_baseline(RewardBatch{{{1, 2}, {3}}}), InsufficientRolloutsError);
}

TEST_CASE("xctx examples") {
    CHECK(xctx_baseline(RewardBatch{{{1, 2}, {3, 4}}}).values[0][0] == 3.0);
    const auto constant = xctx_baseline(RewardBatch{{{2.5, 2.5}, {2.5, 2.5, 2.5}}}).values;
    for (const auto& row : constant) {
        for (double v : row) CHECK(v == 2.5);
    }
    // outlier 8 among N = 6 zeros-and-8
    const auto out = xctx_baseline(RewardBatch{{{0, 0}, {8, 0}, {0, 0}}}).values;
    CHECK(out[1][0] == 0.0);
    CHECK(out[0][0] == doctest::Approx(8.0 / 5.0));
    CHECK(out[2][1] == doctest::Approx(8.0 / 5.0));
    CHECK_THROWS_AS(xctx_baseline(RewardBatch{{{1.0}}}), InsufficientRolloutsError);
    CHECK_NOTHROW(xctx_baseline(RewardBatch{{{1.0}, {2.0}}}));
}

TEST_CASE("rloo and xctx agree with naive oracles on ragged batches") {
    RandomStream s(1);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix r = ragged(s, 2 + rep % 7);
        require_close(rloo_baseline(RewardBatch{r}).values, naive_rloo(r), 1e-12);
        require_close(xctx_baseline(RewardBatch{r}).values, naive_xctx(r), 1e-12);
    }
}

TEST_CASE("variance components agree with the naive oracle for every option") {
    RandomStream s(2);
    for (const auto& opt : kAllOptions) {
        for (int rep = 0; rep < 50; ++rep) {
            const Matrix r = ragged(s, 2 + rep % 7);
            const auto got = estimate_variance_components(RewardBatch{r}, opt);
            const auto want = naive_components(r, opt);
            REQUIRE(got.sigma2_hat == doctest::Approx(want.sigma2_hat).epsilon(1e-12));
            REQUIRE(got.delta2_hat == doctest::Approx(want.delta2_hat).epsilon(1e-12));
        }
    }
}

TEST_CASE("variance components: degenerate batches") {
    const auto flat = estimate_variance_components(RewardBatch{{{2, 2}, {2, 2}, {2, 2}}});
    CHECK(flat.sigma2_hat == 0.0);
    CHECK(flat.delta2_hat == 0.0);
    const auto spread = estimate_variance_components(RewardBatch{{{1, 1}, {4, 4}, {-2, -2}}});
    CHECK(spread.sigma2_hat == 0.0);
    CHECK(spread.delta2_hat > 0.0);
    CHECK_THROWS_AS(estimate_variance_components(RewardBatch{{{1, 2, 3}}}), InsufficientContextsError);
    CHECK_THROWS_AS(estimate_variance_components(RewardBatch{{{1}, {2}}}), InsufficientRolloutsError);
}

TEST_CASE("variance components recover the generating model") {
    // sigma = 1, delta = 2, B = 200, K = 8, averaged over 50 replications
    RandomStream s(3);
    double s2 = 0.0, d2 = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto vc = estimate_variance_components(RewardBatch{random_effects(200, 8, 1.0, 2.0, s)});
        s2 += vc.sigma2_hat / 50.0;
        d2 += vc.delta2_hat / 50.0;
    }
    CHECK(std::abs(s2 - 1.0) < 0.15);
    CHECK(std::abs(d2 - 4.0) < 0.15 * 4.0);
}

TEST_CASE("shrinkage coefficients") {
    const RewardBatch k2{{{0, 1}, {2, 3}}};
    for (double a : shrinkage_coefficients(k2, {0.0, 1.0}).alpha_hat) CHECK(a == 0.0);
    for (double a : shrinkage_coefficients(k2, {1.0, 0.0}).alpha_hat) CHECK(a == 1.0);
    for (double a : shrinkage_coefficients(k2, {0.0, 0.0}).alpha_hat) CHECK(a == 0.0);
    for (double a : shrinkage_coefficients(k2, {1.0, 1.0}).alpha_hat) CHECK(a == 0.5);
}

TEST_CASE("shrinkage weight decreases with K") {
    const VarianceComponents vc{1.3, 0.4};
    double prev = 1.0;
    for (std::size_t K = 2; K < 64; ++K) {
        const double a = shrinkage_weight(vc, K - 1);
        CHECK(a <= prev);
        CHECK(a >= 0.0);
        prev = a;
    }
}

TEST_CASE("js limits: delta2 = 0 gives xctx, sigma2 = 0 gives rloo") {
    const RewardBatch same_means{{{1, 3}, {3, 1}, {2, 2}}};
    REQUIRE(estimate_variance_components(same_means).delta2_hat == 0.0);
    REQUIRE(estimate_variance_components(same_means).sigma2_hat > 0.0);
    BaselineOptions full_batch;
    full_batch.scope = ShrinkageScope::FullBatch;
    CHECK(js_baseline(same_means, full_batch).values == xctx_baseline(same_means).values);

    const RewardBatch constant_rows{{{1, 1}, {4, 4, 4}, {-2, -2}}};
    CHECK(js_baseline(constant_rows).values == rloo_baseline(constant_rows).values);
    CHECK(js_baseline(constant_rows, full_batch).values == rloo_baseline(constant_rows).values);
}

TEST_CASE("js equals the convex combination recomputed independently") {
    RandomStream s(4);
    for (const auto& opt : kAllOptions) {
        for (int rep = 0; rep < 50; ++rep) {
            const Matrix r = ragged(s, 2 + rep % 9);
            const auto vc = naive_components(r, opt);
            const Matrix rl = naive_rloo(r), xc = naive_xctx(r);
            Matrix want = r;
            for (std::size_t c = 0; c < r.size(); ++c) {
                const double noise = vc.sigma2_hat / static_cast<double>(r[c].size() - 1);
                const double a = noise + vc.delta2_hat > 0.0 ? noise / (noise + vc.delta2_hat) : 0.0;
                for (std::size_t i = 0; i < r[c].size(); ++i) want[c][i] = (1.0 - a) * rl[c][i] + a * xc[c][i];
            }
            require_close(js_baseline(RewardBatch{r}, opt).values, want, 1e-10);
        }
    }
}

TEST_CASE("leave-one-out independence under mutation") {
    RandomStream s(5);
    BaselineOptions loo;
    loo.scope = ShrinkageScope::LeaveOneOut;
    BaselineOptions loo_dispersion = loo;
    loo_dispersion.within = WithinVariance::LeaveOneOutDispersion;
    loo_dispersion.xctx_anchor = XctxAnchor::LeaveContextOut;
    for (int rep = 0; rep < 100; ++rep) {
        Matrix r = ragged(s, 3 + rep % 6);
        const std::size_t c = static_cast<std::size_t>(s.uniform() * r.size());
        const std::size_t i = static_cast<std::size_t>(s.uniform() * r[c].size());
        const RewardBatch before{r};
        r[c][i] += 10.0 * s.normal() + 3.0;
        const RewardBatch after{r};
        CHECK(rloo_baseline(after).values[c][i] == doctest::Approx(rloo_baseline(before).values[c][i]).epsilon(1e-12));
        CHECK(xctx_baseline(after).values[c][i] == doctest::Approx(xctx_baseline(before).values[c][i]).epsilon(1e-12));
        CHECK(js_baseline(after, loo).values[c][i] == doctest::Approx(js_baseline(before, loo).values[c][i]).epsilon(1e-10));
        CHECK(js_baseline(after, loo_dispersion).values[c][i] ==
              doctest::Approx(js_baseline(before, loo_dispersion).values[c][i]).epsilon(1e-10));
    }
}

TEST_CASE("leave-one-out scope reproduces the full-batch formula on the reduced batch") {
    RandomStream s(6);
    BaselineOptions loo;
    loo.scope = ShrinkageScope::LeaveOneOut;
    for (int rep = 0; rep < 30; ++rep) {
        const Matrix r = ragged(s, 3 + rep % 5);
        const auto js = js_baseline_detailed(RewardBatch{r}, loo);
        for (std::size_t c = 0; c < r.size(); ++c) {
            for (std::size_t i = 0; i < r[c].size(); ++i) {
                Matrix reduced = r;
                reduced[c].erase(reduced[c].begin() + static_cast<std::ptrdiff_t>(i));
                const auto vc = naive_components(reduced, BaselineOptions{});
                const double noise = vc.sigma2_hat / static_cast<double>(r[c].size() - 1);
                const double a = noise + vc.delta2_hat > 0.0 ? noise / (noise + vc.delta2_hat) : 0.0;
                REQUIRE(js.applied_weights[c][i] == doctest::Approx(a).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("few contexts are flagged") {
    CHECK(js_baseline_detailed(RewardBatch{{{1, 2}, {3, 5}}}).few_contexts);
    CHECK_FALSE(js_baseline_detailed(RewardBatch{{{1, 2}, {3, 5}, {0, 1}}}).few_contexts);
    CHECK_THROWS_AS(js_baseline(RewardBatch{{{1, 2}}}), InsufficientContextsError);
}

TEST_CASE("js has lower MSE to the context mean than rloo") {
    // sigma = 1, delta = 2, B = 50, K = 2, 200 replications
    RandomStream s(7);
    double mse_js = 0.0, mse_rloo = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> mu;
        const RewardBatch b{random_effects(50, 2, 1.0, 2.0, s, &mu)};
        const auto js = js_baseline(b).values;
        const auto rl = rloo_baseline(b).values;
        for (std::size_t c = 0; c < 50; ++c) {
            for (std::size_t i = 0; i < 2; ++i) {
                mse_js += (js[c][i] - mu[c]) * (js[c][i] - mu[c]);
                mse_rloo += (rl[c][i] - mu[c]) * (rl[c][i] - mu[c]);
            }
        }
    }
    CHECK(mse_js < mse_rloo);
}

TEST_CASE("optimal baseline oracle") {
    const std::vector<double> r{1.0, 2.0, 6.0};
    const std::vector<std::vector<double>> equal{{1, 0}, {0, 1}, {0.6, 0.8}};
    CHECK(optimal_baseline_oracle(r, equal) == doctest::Approx(3.0).epsilon(1e-14));

    const std::vector<double> r2{0.0, 10.0};
    const std::vector<std::vector<double>> g2{{1.0}, {std::sqrt(3.0)}};
    CHECK(optimal_baseline_oracle(r2, g2) == doctest::Approx(7.5).epsilon(1e-14));

    const std::vector<std::vector<double>> zeros{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(optimal_baseline_oracle(r2, zeros), DegenerateWeightsError);
    CHECK_THROWS_AS(optimal_baseline_oracle(r, g2), ShapeError);
    const std::vector<double> one{1.0};
    const std::vector<std::vector<double>> g1{{1.0}};
    CHECK_THROWS_AS(optimal_baseline_oracle(one, g1), InsufficientRolloutsError);
}

TEST_CASE("optimal baseline minimizes the brute-force variance objective") {
    RandomStream s(8);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 3 + rep % 6, d = 1 + rep % 4;
        std::vector<double> r(n);
        std::vector<std::vector<double>> g(n, std::vector<double>(d));
        for (std::size_t k = 0; k < n; ++k) {
            r[k] = s.normal() * 3.0;
            for (double& v : g[k]) v = s.normal();
        }
        const double bstar = optimal_baseline_oracle(r, g);
        const double lo = *std::min_element(r.begin(), r.end());
        const double hi = *std::max_element(r.begin(), r.end());
        auto objective = [&](double b) {
            double q = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                for (double v : g[k]) q += (r[k] - b) * (r[k] - b) * v * v;
            }
            return q / static_cast<double>(n);
        };
        double best_b = lo, best = objective(lo);
        for (double b = lo; b <= hi; b += 1e-3) {
            const double q = objective(b);
            if (q < best) {
                best = q;
                best_b = b;
            }
        }
        CHECK(std::abs(best_b - bstar) <= 1e-3);
    }
}

TEST_CASE("compute_baseline dispatch and names") {
    const RewardBatch b{{{1, 2}, {3, 5}, {0, 1}}};
    CHECK(compute_baseline(b, BaselineKind::Rloo).values == rloo_baseline(b).values);
    CHECK(compute_baseline(b, BaselineKind::Xctx).values == xctx_baseline(b).values);
    CHECK(compute_baseline(b, BaselineKind::JamesStein).values == js_baseline(b).values);
    CHECK(compute_baseline(RewardBatch{{{1}, {2}}}, BaselineKind::None).values == Matrix{{0.0}, {0.0}});
    for (auto kind : {BaselineKind::None, BaselineKind::Rloo, BaselineKind::Xctx, BaselineKind::JamesStein}) {
        CHECK(parse_baseline_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_baseline_kind("bogus"), ConfigError);
    CHECK_THROWS_AS(rloo_baseline(RewardBatch{{{1.0, std::nan("")}, {1.0, 2.0}}}), DomainError);
}

}  // TEST_SUITE
