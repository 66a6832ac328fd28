#include "resched/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "resched/errors.hpp"

namespace resched {

using nlohmann::json;

namespace {

std::string_view to_string(XctxAnchor a) {
    return a == XctxAnchor::PerSampleMean ? "per_sample_mean" : "leave_context_out";
}
std::string_view to_string(WithinVariance w) {
    return w == WithinVariance::Pooled ? "pooled" : "leave_one_out_dispersion";
}
std::string_view to_string(ShrinkageScope s) {
    return s == ShrinkageScope::FullBatch ? "full_batch" : "leave_one_out";
}

// Object reader that remembers which keys were consumed so leftovers can be
// reported as typos.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    template <class T>
    void get_positive_count(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_number_unsigned()) throw ConfigError(name_ + "." + key + ": expected a non-negative integer");
        out = it->template get<T>();
    }

    template <class Fn>
    void get_string(const char* key, Fn&& assign) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_string()) throw ConfigError(name_ + "." + key + ": expected a string");
        assign(it->template get<std::string>());
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return name_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(name_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

std::vector<std::size_t> read_grid(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& v : j) {
        if (!v.is_number_unsigned()) throw ConfigError(where + ": expected non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

template <class T, class Parse>
std::vector<T> read_names(const json& j, const std::string& where, Parse&& parse) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of names");
    std::vector<T> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw ConfigError(where + ": expected strings");
        out.push_back(parse(v.get<std::string>()));
    }
    return out;
}

void read_baseline_options(const json& j, const std::string& where, BaselineOptions& o) {
    Section s(j, where);
    s.get_string("anchor", [&](const std::string& v) {
        if (v == "per_sample_mean") o.xctx_anchor = XctxAnchor::PerSampleMean;
        else if (v == "leave_context_out") o.xctx_anchor = XctxAnchor::LeaveContextOut;
        else throw ConfigError(where + ".anchor: unknown value '" + v + "'");
    });
    s.get_string("within_variance", [&](const std::string& v) {
        if (v == "pooled") o.within = WithinVariance::Pooled;
        else if (v == "leave_one_out_dispersion") o.within = WithinVariance::LeaveOneOutDispersion;
        else throw ConfigError(where + ".within_variance: unknown value '" + v + "'");
    });
    s.get_string("scope", [&](const std::string& v) {
        if (v == "full_batch") o.scope = ShrinkageScope::FullBatch;
        else if (v == "leave_one_out") o.scope = ShrinkageScope::LeaveOneOut;
        else throw ConfigError(where + ".scope: unknown value '" + v + "'");
    });
    s.finish();
}

json baseline_options_json(const BaselineOptions& o) {
    json j;
    j["anchor"] = to_string(o.xctx_anchor);
    j["within_variance"] = to_string(o.within);
    j["scope"] = to_string(o.scope);
    return j;
}

void read_bench(const json& j, SweepConfig& b) {
    Section s(j, "bench");
    if (const json* v = s.child("contexts")) b.contexts_grid = read_grid(*v, "bench.contexts");
    if (const json* v = s.child("rollouts")) b.rollouts_grid = read_grid(*v, "bench.rollouts");
    if (const json* v = s.child("horizons")) b.horizon_grid = read_grid(*v, "bench.horizons");
    s.get_positive_count("batches_per_cell", b.batches_per_cell);
    s.get("alpha", b.alpha_value);
    if (const json* v = s.child("baselines")) {
        b.baselines = read_names<BenchBaseline>(*v, "bench.baselines", [](const std::string& n) {
            return parse_bench_baseline(n);
        });
    }
    if (const json* v = s.child("reward_model")) {
        Section m(*v, "bench.reward_model");
        m.get("mu_scale", b.model.mu_scale);
        m.get("log_scale_mean", b.model.log_scale_mean);
        m.get("log_scale_sd", b.model.log_scale_sd);
        m.get("spike_prob", b.model.spike_prob);
        m.get("spike_magnitude", b.model.spike_magnitude);
        m.finish();
    }
    if (const json* v = s.child("js")) read_baseline_options(*v, "bench.js", b.baseline_options);
    s.finish();
}

void read_train(const json& j, TrainSection& t) {
    Section s(j, "train");
    if (const json* v = s.child("horizons")) t.horizons = read_grid(*v, "train.horizons");
    if (const json* v = s.child("baselines")) {
        t.baselines = read_names<BaselineKind>(*v, "train.baselines", [](const std::string& n) {
            try {
                return parse_baseline_kind(n);
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
        });
    }
    s.get_positive_count("contexts", t.contexts);
    s.get_positive_count("rollouts", t.rollouts);
    s.get("learning_rate", t.learning_rate);
    s.get("weight_decay", t.weight_decay);
    s.get("grad_clip_norm", t.grad_clip_norm);
    s.get_positive_count("iterations", t.iterations);
    s.get_string("policy", [&](const std::string& v) { t.policy = parse_policy_variant(v); });
    s.get_positive_count("hidden", t.hidden);
    s.get("initial_concentration", t.initial_concentration);
    if (const json* v = s.child("js")) read_baseline_options(*v, "train.js", t.baseline_options);
    s.finish();
}

void read_sampler(const json& j, SamplerSection& sm) {
    Section s(j, "sampler");
    s.get_positive_count("min_components", sm.generator.min_components);
    s.get_positive_count("max_components", sm.generator.max_components);
    s.get("mean_range", sm.generator.mean_range);
    s.get("min_stddev", sm.generator.min_stddev);
    s.get("max_stddev", sm.generator.max_stddev);
    s.get_positive_count("reference_steps", sm.reward.reference_steps);
    s.get_positive_count("eval_contexts", sm.eval_contexts);
    s.get_positive_count("eval_seed", sm.eval_seed);
    s.finish();
}

json config_json(const ExperimentConfig& c) {
    json bench_baselines = json::array();
    for (auto b : c.bench.baselines) bench_baselines.push_back(to_string(b));
    json train_baselines = json::array();
    for (auto b : c.train.baselines) train_baselines.push_back(to_string(b));
    const SpikyRewardModel& m = c.bench.model;
    return json{
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"threads", c.threads},
        {"bench",
         {{"contexts", c.bench.contexts_grid},
          {"rollouts", c.bench.rollouts_grid},
          {"horizons", c.bench.horizon_grid},
          {"batches_per_cell", c.bench.batches_per_cell},
          {"alpha", c.bench.alpha_value},
          {"baselines", bench_baselines},
          {"reward_model",
           {{"mu_scale", m.mu_scale},
            {"log_scale_mean", m.log_scale_mean},
            {"log_scale_sd", m.log_scale_sd},
            {"spike_prob", m.spike_prob},
            {"spike_magnitude", m.spike_magnitude}}},
          {"js", baseline_options_json(c.bench.baseline_options)}}},
        {"train",
         {{"horizons", c.train.horizons},
          {"baselines", train_baselines},
          {"contexts", c.train.contexts},
          {"rollouts", c.train.rollouts},
          {"learning_rate", c.train.learning_rate},
          {"weight_decay", c.train.weight_decay},
          {"grad_clip_norm", c.train.grad_clip_norm},
          {"iterations", c.train.iterations},
          {"policy", to_string(c.train.policy)},
          {"hidden", c.train.hidden},
          {"initial_concentration", c.train.initial_concentration},
          {"js", baseline_options_json(c.train.baseline_options)}}},
        {"sampler",
         {{"min_components", c.sampler.generator.min_components},
          {"max_components", c.sampler.generator.max_components},
          {"mean_range", c.sampler.generator.mean_range},
          {"min_stddev", c.sampler.generator.min_stddev},
          {"max_stddev", c.sampler.generator.max_stddev},
          {"reference_steps", c.sampler.reward.reference_steps},
          {"eval_contexts", c.sampler.eval_contexts},
          {"eval_seed", c.sampler.eval_seed}}},
    };
}

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    const json j = parse_json(json_text, "config");
    ExperimentConfig c;
    Section top(j, "config");
    top.get_positive_count("seed", c.seed);
    top.get_string("output_dir", [&](const std::string& v) { c.output_dir = v; });
    top.get_positive_count("threads", c.threads);
    if (const json* v = top.child("bench")) read_bench(*v, c.bench);
    if (const json* v = top.child("train")) read_train(*v, c.train);
    if (const json* v = top.child("sampler")) read_sampler(*v, c.sampler);
    top.finish();
    c.bench.seed = c.seed;
    c.bench.threads = c.threads;
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
    json j = config_json(config);
    j.erase("output_dir");
    j.erase("threads");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string policy_to_json(const PolicyParams& params) {
    json j;
    j["schema"] = kPolicySchema;
    if (params.is_analytic()) {
        j["variant"] = "analytic";
        j["alpha"] = params.analytic().params.alpha;
    } else {
        const FeatureNetPolicy& net = params.feature_net();
        j["variant"] = "feature_net";
        j["input_dim"] = net.input_dim();
        j["hidden_dim"] = net.hidden_dim();
        j["output_dim"] = net.output_dim();
        auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
        j["w1"] = vec(net.w1());
        j["b1"] = vec(net.b1());
        j["w2"] = vec(net.w2());
        j["b2"] = vec(net.b2());
    }
    return j.dump() + "\n";
}

PolicyParams policy_from_json(std::string_view json_text) {
    const json j = parse_json(json_text, "checkpoint");
    if (!j.is_object()) throw ConfigError("checkpoint: expected an object");
    try {
        if (j.at("schema").get<std::string>() != kPolicySchema) {
            throw ConfigError("checkpoint: unsupported schema '" + j.at("schema").get<std::string>() + "'");
        }
        const std::string variant = j.at("variant").get<std::string>();
        if (variant == "analytic") {
            DirichletParams alpha{j.at("alpha").get<std::vector<double>>()};
            try {
                validate(alpha);
            } catch (const Error& e) {
                throw ConfigError(std::string("checkpoint: ") + e.what());
            }
            return AnalyticPolicy{std::move(alpha)};
        }
        if (variant != "feature_net") throw ConfigError("checkpoint: unknown variant '" + variant + "'");
        const auto in = j.at("input_dim").get<std::size_t>();
        const auto hidden = j.at("hidden_dim").get<std::size_t>();
        const auto out = j.at("output_dim").get<std::size_t>();
        std::vector<double> weights;
        const std::pair<const char*, std::size_t> blocks[] = {
            {"w1", hidden * in}, {"b1", hidden}, {"w2", out * hidden}, {"b2", out}};
        for (const auto& [key, expected] : blocks) {
            const auto block = j.at(key).get<std::vector<double>>();
            if (block.size() != expected) throw ConfigError(std::string("checkpoint: ") + key + " has the wrong size");
            weights.insert(weights.end(), block.begin(), block.end());
        }
        for (double w : weights) {
            if (!std::isfinite(w)) throw ConfigError("checkpoint: non-finite weight");
        }
        try {
            return FeatureNetPolicy(in, hidden, out, std::move(weights));
        } catch (const Error& e) {
            throw ConfigError(std::string("checkpoint: ") + e.what());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

void save_policy(const PolicyParams& params, const std::string& path) { write_text_file(path, policy_to_json(params)); }

PolicyParams load_policy(const std::string& path) { return policy_from_json(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for '" + path + "'");
}

std::string format_double(double value) { return json(value).dump(); }

}  // namespace resched
