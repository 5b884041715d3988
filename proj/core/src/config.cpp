#include "hotgp/config.hpp"

#include "hotgp/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hotgp {

namespace {

using nlohmann::json;

struct FieldBinding {
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

template <typename T, typename M>
FieldBinding bind(M RunConfig::* member) {
    return {
        [member](RunConfig& cfg, const json& v) { cfg.*member = v.get<T>(); },
        [member](const RunConfig& cfg) { return json(cfg.*member); },
    };
}

const std::map<std::string, FieldBinding>& field_table() {
    static const std::map<std::string, FieldBinding> table = {
        {"env", bind<std::string>(&RunConfig::env)},
        {"strategy", bind<std::string>(&RunConfig::strategy)},
        {"seed", bind<std::uint64_t>(&RunConfig::seed)},
        {"r_min_start", bind<double>(&RunConfig::r_min_start)},
        {"r_min_end", bind<double>(&RunConfig::r_min_end)},
        {"hucrl_beta", bind<double>(&RunConfig::hucrl_beta)},
        {"hucrl_candidates", bind<int>(&RunConfig::hucrl_candidates)},
        {"total_env_steps", bind<std::int64_t>(&RunConfig::total_env_steps)},
        {"horizon", bind<int>(&RunConfig::horizon)},
        {"model_rollouts", bind<int>(&RunConfig::model_rollouts)},
        {"rollout_steps", bind<int>(&RunConfig::rollout_steps)},
        {"batch_size", bind<int>(&RunConfig::batch_size)},
        {"gamma", bind<double>(&RunConfig::gamma)},
        {"lr", bind<double>(&RunConfig::lr)},
        {"tau", bind<double>(&RunConfig::tau)},
        {"buffer_capacity", bind<std::int64_t>(&RunConfig::buffer_capacity)},
        {"updates_per_env_step", bind<int>(&RunConfig::updates_per_env_step)},
        {"model", bind<std::string>(&RunConfig::model)},
        {"subsample_cap", bind<int>(&RunConfig::subsample_cap)},
        {"mean_epochs", bind<int>(&RunConfig::mean_epochs)},
        {"mean_batch", bind<int>(&RunConfig::mean_batch)},
        {"mean_lr", bind<double>(&RunConfig::mean_lr)},
        {"kernel_steps", bind<int>(&RunConfig::kernel_steps)},
        {"kernel_lr", bind<double>(&RunConfig::kernel_lr)},
        {"joint_cov", bind<bool>(&RunConfig::joint_cov)},
        {"ensemble_size", bind<int>(&RunConfig::ensemble_size)},
        {"ensemble_epochs", bind<int>(&RunConfig::ensemble_epochs)},
        {"logvar_min", bind<double>(&RunConfig::logvar_min)},
        {"logvar_max", bind<double>(&RunConfig::logvar_max)},
        {"model_hidden_layers", bind<int>(&RunConfig::model_hidden_layers)},
        {"model_hidden_units", bind<int>(&RunConfig::model_hidden_units)},
        {"model_activation", bind<std::string>(&RunConfig::model_activation)},
        {"policy", bind<std::string>(&RunConfig::policy)},
        {"policy_hidden_layers", bind<int>(&RunConfig::policy_hidden_layers)},
        {"policy_hidden_units", bind<int>(&RunConfig::policy_hidden_units)},
        {"ddpg_explore_noise", bind<bool>(&RunConfig::ddpg_explore_noise)},
        {"ddpg_noise_start", bind<double>(&RunConfig::ddpg_noise_start)},
        {"ddpg_noise_end", bind<double>(&RunConfig::ddpg_noise_end)},
        {"eval_every_episodes", bind<int>(&RunConfig::eval_every_episodes)},
        {"eval_episodes", bind<int>(&RunConfig::eval_episodes)},
        {"checkpoint_keep", bind<int>(&RunConfig::checkpoint_keep)},
        {"arm_action_penalty", bind<double>(&RunConfig::arm_action_penalty)},
        {"arm_literal_penalty_sign", bind<bool>(&RunConfig::arm_literal_penalty_sign)},
        {"maze_grid", bind<std::vector<std::string>>(&RunConfig::maze_grid)},
    };
    return table;
}

void apply_object(RunConfig& cfg, const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    const auto& table = field_table();
    for (const auto& [key, value] : obj.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
        try {
            it->second.set(cfg, value);
        } catch (const json::exception& e) {
            throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
        }
    }
}

json value_from_text(const std::string& text) {
    json v = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded()) return json(text);  // bare strings need no quotes
    return v;
}

}  // namespace

std::vector<std::string> known_config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, binding] : field_table()) keys.push_back(key);
    return keys;
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (env != "u_maze" && env != "medium_maze" && env != "coverage" && env != "sparse_arm") {
        fail("unknown env '" + env + "'");
    }
    if (model != "gp" && model != "ensemble") fail("model must be gp or ensemble");
    if (policy != "sac" && policy != "ddpg") fail("policy must be sac or ddpg");
    if (!(r_min_start >= 0.0 && r_min_start <= r_min_end && r_min_end < 1.0)) {
        fail("need 0 <= r_min_start <= r_min_end < 1");
    }
    if (rollout_steps < 1) fail("rollout_steps (K) must be >= 1");
    if (horizon < 1) fail("horizon must be >= 1");
    if (total_env_steps < horizon) fail("total_env_steps must cover one episode");
    if (model_rollouts < 0) fail("model_rollouts must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
    if (tau <= 0.0 || tau > 1.0) fail("tau must be in (0, 1]");
    if (buffer_capacity < 0) fail("buffer_capacity must be >= 0");
    if (updates_per_env_step < 0) fail("updates_per_env_step must be >= 0");
    if (subsample_cap < 2) fail("subsample_cap must be >= 2");
    if (ensemble_size < 1) fail("ensemble_size must be >= 1");
    if (hucrl_candidates < 1) fail("hucrl_candidates (Z) must be >= 1");
    if (hucrl_beta < 0.0) fail("hucrl_beta must be >= 0");
    if (eval_every_episodes < 1) fail("eval_every_episodes must be >= 1");
    if (eval_episodes < 1) fail("eval_episodes must be >= 1");
    if (logvar_min >= logvar_max) fail("logvar_min must be below logvar_max");
    if (checkpoint_keep < 1) fail("checkpoint_keep must be >= 1");
}

RunConfig config_from_json_text(const std::string& text,
                                const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    RunConfig cfg;
    std::string preset;
    if (doc.contains("preset")) preset = doc.at("preset").get<std::string>();
    if (doc.contains("defaults")) apply_object(cfg, doc.at("defaults"), "defaults");

    // A preset=NAME override is resolved before the preset block is applied.
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + item + "' is not KEY=VALUE");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "preset") {
            preset = value;
        } else {
            kv.emplace_back(key, value);
        }
    }

    if (!preset.empty()) {
        if (!doc.contains("presets") || !doc.at("presets").contains(preset)) {
            throw ConfigError("config: preset '" + preset + "' not found");
        }
        apply_object(cfg, doc.at("presets").at(preset), "preset " + preset);
    }

    for (const auto& [key, value] : kv) {
        json obj = json::object();
        obj[key] = value_from_text(value);
        apply_object(cfg, obj, "override");
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str(), overrides);
}

std::string canonical_json(const RunConfig& cfg) {
    json doc = json::object();
    for (const auto& [key, binding] : field_table()) doc[key] = binding.get(cfg);
    return doc.dump(2) + "\n";
}

RunConfig parse_canonical_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config snapshot parse error: ") + e.what());
    }
    RunConfig cfg;
    apply_object(cfg, doc, "snapshot");
    cfg.validate();
    return cfg;
}

}  // namespace hotgp
