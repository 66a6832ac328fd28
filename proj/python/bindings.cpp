#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "resched/baselines.hpp"
#include "resched/errors.hpp"
#include "resched/experiments.hpp"
#include "resched/io.hpp"
#include "resched/random_stream.hpp"
#include "resched/schedule_policy.hpp"
#include "resched/special_math.hpp"
#include "resched/synthetic_bench.hpp"
#include "resched/toy_sampler.hpp"

namespace py = pybind11;
using namespace resched;

namespace {

using Matrix = std::vector<std::vector<double>>;

BaselineOptions make_options(const std::string& anchor, const std::string& within, const std::string& scope) {
    BaselineOptions o;
    if (anchor == "per_sample_mean") o.xctx_anchor = XctxAnchor::PerSampleMean;
    else if (anchor == "leave_context_out") o.xctx_anchor = XctxAnchor::LeaveContextOut;
    else throw ConfigError("unknown anchor '" + anchor + "'");
    if (within == "pooled") o.within = WithinVariance::Pooled;
    else if (within == "leave_one_out_dispersion") o.within = WithinVariance::LeaveOneOutDispersion;
    else throw ConfigError("unknown within_variance '" + within + "'");
    if (scope == "leave_one_out") o.scope = ShrinkageScope::LeaveOneOut;
    else if (scope == "full_batch") o.scope = ShrinkageScope::FullBatch;
    else throw ConfigError("unknown scope '" + scope + "'");
    return o;
}

RandomStream make_stream(std::uint64_t seed, const std::vector<std::uint64_t>& path) { return RandomStream(seed, path); }

SamplerContext make_context(const std::vector<double>& weights, const std::vector<double>& means,
                            const std::vector<double>& stddevs, double x_T) {
    SamplerContext ctx{GaussianMixture{weights, means, stddevs}, x_T};
    validate(ctx.mixture);
    return ctx;
}

Schedule make_schedule(const std::vector<double>& timesteps) {
    Schedule s;
    s.timesteps = timesteps;
    s.stopping_margin = timesteps.empty() ? 1.0 : timesteps.back();
    return s;
}

}  // namespace

PYBIND11_MODULE(_resched, m) {
    m.doc() = "Instance-level timestep schedules: baselines, Dirichlet policies, toy sampler, benchmarks";

    static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
    static py::exception<ConfigError> config_error(m, "ConfigError", base_error.ptr());
    static py::exception<DomainError> domain_error(m, "DomainError", base_error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const DomainError& e) {
            py::set_error(domain_error, e.what());
        } catch (const Error& e) {
            py::set_error(base_error, e.what());
        }
    });

    m.def("digamma", &digamma, py::arg("x"));
    m.def("log_gamma", &log_gamma, py::arg("x"));

    m.def(
        "sample_dirichlet",
        [](const std::vector<double>& alpha, std::uint64_t seed, const std::vector<std::uint64_t>& path) {
            RandomStream s = make_stream(seed, path);
            const SimplexAllocation tau = sample_dirichlet(alpha, s);
            return std::vector<double>(tau.tau().begin(), tau.tau().end());
        },
        py::arg("alpha"), py::arg("seed"), py::arg("path") = std::vector<std::uint64_t>{});
    m.def(
        "dirichlet_log_prob",
        [](const std::vector<double>& tau, const std::vector<double>& alpha) {
            return dirichlet_log_prob(SimplexAllocation(tau), DirichletParams{alpha});
        },
        py::arg("tau"), py::arg("alpha"));
    m.def(
        "score_wrt_alpha",
        [](const std::vector<double>& tau, const std::vector<double>& alpha) {
            return score_wrt_alpha(SimplexAllocation(tau), DirichletParams{alpha});
        },
        py::arg("tau"), py::arg("alpha"));
    m.def(
        "allocation_to_schedule",
        [](const std::vector<double>& tau) {
            const Schedule s = allocation_to_schedule(SimplexAllocation(tau));
            return py::make_tuple(s.timesteps, s.stopping_margin);
        },
        py::arg("tau"), "Returns (timesteps, stopping_margin).");

    m.def("rloo_baseline", [](const Matrix& r) { return rloo_baseline(RewardBatch{r}).values; }, py::arg("rewards"));
    m.def("xctx_baseline", [](const Matrix& r) { return xctx_baseline(RewardBatch{r}).values; }, py::arg("rewards"));
    m.def(
        "js_baseline",
        [](const Matrix& r, const std::string& anchor, const std::string& within, const std::string& scope) {
            return js_baseline(RewardBatch{r}, make_options(anchor, within, scope)).values;
        },
        py::arg("rewards"), py::arg("anchor") = "per_sample_mean", py::arg("within_variance") = "pooled",
        py::arg("scope") = "leave_one_out");
    m.def(
        "variance_components",
        [](const Matrix& r, const std::string& anchor, const std::string& within) {
            const auto vc = estimate_variance_components(RewardBatch{r}, make_options(anchor, within, "full_batch"));
            return py::make_tuple(vc.sigma2_hat, vc.delta2_hat);
        },
        py::arg("rewards"), py::arg("anchor") = "per_sample_mean", py::arg("within_variance") = "pooled",
        "Returns (sigma2_hat, delta2_hat).");
    m.def(
        "optimal_baseline",
        [](const std::vector<double>& rewards, const Matrix& scores) { return optimal_baseline_oracle(rewards, scores); },
        py::arg("rewards"), py::arg("scores"));

    m.def(
        "marginal_velocity",
        [](double x, double t, const std::vector<double>& weights, const std::vector<double>& means,
           const std::vector<double>& stddevs) {
            return marginal_velocity(x, t, make_context(weights, means, stddevs, 0.0).mixture);
        },
        py::arg("x"), py::arg("t"), py::arg("weights"), py::arg("means"), py::arg("stddevs"));
    m.def(
        "integrate",
        [](const std::vector<double>& timesteps, const std::vector<double>& weights, const std::vector<double>& means,
           const std::vector<double>& stddevs, double x_T) {
            return integrate(make_schedule(timesteps), make_context(weights, means, stddevs, x_T));
        },
        py::arg("timesteps"), py::arg("weights"), py::arg("means"), py::arg("stddevs"), py::arg("x_T"));
    m.def(
        "terminal_reward",
        [](const std::vector<double>& timesteps, const std::vector<double>& weights, const std::vector<double>& means,
           const std::vector<double>& stddevs, double x_T, std::size_t reference_steps) {
            return terminal_reward(make_schedule(timesteps), make_context(weights, means, stddevs, x_T),
                                   RewardSpec{reference_steps});
        },
        py::arg("timesteps"), py::arg("weights"), py::arg("means"), py::arg("stddevs"), py::arg("x_T"),
        py::arg("reference_steps") = 2048);

    m.def(
        "config_hash", [](const std::string& config_json) { return config_hash(parse_config(config_json)); },
        py::arg("config_json") = "{}");
    m.def(
        "bench",
        [](const std::string& config_json) {
            const ExperimentConfig c = parse_config(config_json);
            VarianceReport report;
            {
                py::gil_scoped_release release;
                report = run_sweep(c.bench);
            }
            std::ostringstream csv;
            write_csv(report, csv);
            return csv.str();
        },
        py::arg("config_json") = "{}", "Runs the variance sweep and returns the CSV text.");
    m.def(
        "train_toy",
        [](const std::string& config_json, std::size_t steps, const std::string& baseline) {
            const ExperimentConfig c = parse_config(config_json);
            const ToyExperimentConfig toy = toy_experiment(c, steps, parse_baseline_kind(baseline));
            std::optional<ToyRunResult> result;
            {
                py::gil_scoped_release release;
                result.emplace(run_toy_experiment(toy, c.seed));
            }
            const ToyRunResult& run = *result;
            py::dict out;
            out["reward_trace"] = run.training.reward_trace;
            out["checkpoint"] = policy_to_json(run.training.params);
            out["learned_mean_reward"] = run.evaluation.learned_mean_reward;
            out["uniform_mean_reward"] = run.evaluation.uniform_mean_reward;
            out["relative_gain"] = run.evaluation.relative_gain;
            out["wins"] = run.evaluation.wins;
            out["contexts"] = run.evaluation.contexts;
            return out;
        },
        py::arg("config_json"), py::arg("steps"), py::arg("baseline") = "js");
}
