// resched: bench / train / eval front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "resched/errors.hpp"
#include "resched/experiments.hpp"
#include "resched/io.hpp"
#include "resched/special_math.hpp"
#include "resched/synthetic_bench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace resched;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config (JSON); defaults when omitted");
    cmd->add_option("--seed", flags.seed, "global seed, overrides the config");
    cmd->add_option("--out", flags.out, "output directory, overrides RESCHED_OUT_DIR and the config");
    cmd->add_option("--threads", flags.threads, "worker thread cap")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig config = flags.config_path.empty() ? ExperimentConfig{} : load_config(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.threads) config.threads = *flags.threads;
    if (!flags.out.empty()) {
        config.output_dir = flags.out;
    } else if (const char* env = std::getenv("RESCHED_OUT_DIR"); env != nullptr && *env != '\0') {
        config.output_dir = env;
    }
    config.bench.seed = config.seed;
    config.bench.threads = config.threads;
    validate(config);
    return config;
}

fs::path prepare_out(const ExperimentConfig& config) {
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

json manifest_head(const char* command, const ExperimentConfig& config) {
    json m;
    m["command"] = command;
    m["config_hash"] = config_hash(config);
    m["seed"] = config.seed;
    m["config"] = json::parse(config_to_json(config));
    m["config"].erase("output_dir");
    m["config"].erase("threads");
    return m;
}

void write_json(const fs::path& path, const json& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

// Wall time is kept out of the reproducible outputs.
void write_timing(const fs::path& dir, const char* command, double seconds) {
    json t;
    t["command"] = command;
    t["wall_seconds"] = seconds;
    write_json(dir / (std::string(command) + "_timing.json"), t);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_bench(const CommonFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig config = resolve_config(flags);
    const fs::path dir = prepare_out(config);

    const VarianceReport report = run_sweep(config.bench);
    std::ostringstream csv;
    write_csv(report, csv);
    write_text_file((dir / "bench.csv").string(), csv.str());

    json m = manifest_head("bench", config);
    m["outputs"] = {{"csv", "bench.csv"}};
    const bool paired = std::count(report.baselines.begin(), report.baselines.end(), BenchBaseline::Rloo) &&
                        std::count(report.baselines.begin(), report.baselines.end(), BenchBaseline::JamesStein);
    if (paired) {
        std::size_t wins = 0;
        double k2_sum = 0.0;
        std::size_t k2_cells = 0;
        for (const auto& cell : report.cells) {
            const double rloo = cell.variance(BenchBaseline::Rloo);
            const double js = cell.variance(BenchBaseline::JamesStein);
            if (js < rloo) ++wins;
            if (cell.cell.rollouts == 2) {
                k2_sum += js / rloo;
                ++k2_cells;
            }
        }
        m["summary"] = {{"cells", report.cells.size()}, {"js_below_rloo", wins}};
        if (k2_cells > 0) m["summary"]["k2_mean_js_over_rloo"] = std::stod(format_g6(k2_sum / k2_cells));
    }
    write_json(dir / "bench_manifest.json", m);
    write_timing(dir, "bench", seconds_since(t0));

    write_table(report, std::cout);
    std::cout << "wrote " << (dir / "bench.csv").string() << "\n";
    return 0;
}

json evaluation_json(const ScheduleEvaluation& ev) {
    return json{{"learned_mean_reward", std::stod(format_g6(ev.learned_mean_reward))},
                {"uniform_mean_reward", std::stod(format_g6(ev.uniform_mean_reward))},
                {"relative_gain", std::stod(format_g6(ev.relative_gain))},
                {"wins", ev.wins},
                {"contexts", ev.contexts}};
}

int cmd_train(const CommonFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig config = resolve_config(flags);
    const fs::path dir = prepare_out(config);

    json m = manifest_head("train", config);
    m["runs"] = json::array();
    for (std::size_t L : config.train.horizons) {
        for (BaselineKind kind : config.train.baselines) {
            const ToyRunResult run = run_toy_experiment(toy_experiment(config, L, kind), config.seed);
            const std::string stem = "train_L" + std::to_string(L) + "_" + std::string(to_string(kind));

            std::ostringstream trace;
            trace << "iteration,mean_reward\n";
            for (std::size_t it = 0; it < run.training.reward_trace.size(); ++it) {
                trace << it << ',' << format_g6(run.training.reward_trace[it]) << '\n';
            }
            write_text_file((dir / (stem + "_trace.csv")).string(), trace.str());
            save_policy(run.training.params, (dir / (stem + "_policy.json")).string());

            m["runs"].push_back({{"steps", L},
                                 {"baseline", to_string(kind)},
                                 {"trace", stem + "_trace.csv"},
                                 {"checkpoint", stem + "_policy.json"},
                                 {"evaluation", evaluation_json(run.evaluation)}});
            std::printf("L=%-3zu %-5s learned %.6g  uniform %.6g  gain %+.2f%%  wins %zu/%zu\n", L,
                        std::string(to_string(kind)).c_str(), run.evaluation.learned_mean_reward,
                        run.evaluation.uniform_mean_reward, 100.0 * run.evaluation.relative_gain, run.evaluation.wins,
                        run.evaluation.contexts);
        }
    }
    write_json(dir / "train_manifest.json", m);
    write_timing(dir, "train", seconds_since(t0));
    return 0;
}

std::vector<double> rounded(std::span<const double> xs) {
    std::vector<double> out;
    for (double x : xs) out.push_back(std::stod(format_g6(x)));
    return out;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint) {
    const ExperimentConfig config = resolve_config(flags);
    const PolicyParams policy = load_policy(checkpoint);
    if (!policy.is_analytic() && policy.feature_net().input_dim() != kContextFeatureDim) {
        throw ConfigError("checkpoint: feature network expects " + std::to_string(policy.feature_net().input_dim()) +
                          " inputs, the toy sampler provides " + std::to_string(kContextFeatureDim));
    }
    if (policy.allocation_dim() < 2) throw ConfigError("checkpoint: allocation dimension below 2");
    const ToySamplerEnv env(policy.allocation_dim() - 1, config.sampler.generator, config.sampler.reward);
    const auto contexts = held_out_contexts(env, config.sampler, config.threads);
    const std::string hash = config_hash(config);
    const Schedule uniform = uniform_schedule(env.steps());
    const RandomStream root(config.seed, {0x6576616cULL});

    std::ostringstream lines;
    for (std::size_t c = 0; c < contexts.size(); ++c) {
        const auto& ctx = contexts[c];
        const DirichletParams alpha = policy_forward(policy, ctx.features);
        const Schedule mean = mean_schedule(policy, ctx.features);
        RandomStream s = root.child(c);
        const Schedule sampled = allocation_to_schedule(sample_dirichlet(alpha.alpha, s));
        json line{{"config_hash", hash},
                  {"seed", config.seed},
                  {"context", c},
                  {"features", rounded(ctx.features.values)},
                  {"alpha", rounded(alpha.alpha)},
                  {"mean_schedule", rounded(mean.timesteps)},
                  {"stopping_margin", std::stod(format_g6(mean.stopping_margin))},
                  {"reward", std::stod(format_g6(terminal_reward(mean, ctx.sampler, ctx.reference)))},
                  {"sampled_schedule", rounded(sampled.timesteps)},
                  {"sampled_reward", std::stod(format_g6(terminal_reward(sampled, ctx.sampler, ctx.reference)))},
                  {"uniform_reward", std::stod(format_g6(terminal_reward(uniform, ctx.sampler, ctx.reference)))}};
        lines << line.dump() << '\n';
    }
    std::cout << lines.str();
    if (!flags.out.empty() || std::getenv("RESCHED_OUT_DIR") != nullptr) {
        const fs::path dir = prepare_out(config);
        write_text_file((dir / "eval.jsonl").string(), lines.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instance-level timestep schedules: variance benchmark, training, evaluation"};
    app.require_subcommand(1);
    CommonFlags bench_flags, train_flags, eval_flags;
    std::string checkpoint;

    CLI::App* bench = app.add_subcommand("bench", "REINFORCE variance sweep over (B, K, L)");
    add_common(bench, bench_flags);
    CLI::App* train = app.add_subcommand("train", "train schedule policies on the toy sampler");
    add_common(train, train_flags);
    CLI::App* eval = app.add_subcommand("eval", "per-context schedules and rewards of a checkpoint, as JSON lines");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint, "policy checkpoint (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*bench) return cmd_bench(bench_flags);
        if (*train) return cmd_train(train_flags);
        if (*eval) return cmd_eval(eval_flags, checkpoint);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
