#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hotgp {

// Full experiment description. Field defaults are the task-agnostic values;
// per-task presets override them from the config file.
struct RunConfig {
    std::string env = "u_maze";
    std::string strategy = "hotgp";
    std::uint64_t seed = 0;

    // optimism
    double r_min_start = 0.1;
    double r_min_end = 0.5;
    double hucrl_beta = 0.01;
    int hucrl_candidates = 5;

    // outer loop
    std::int64_t total_env_steps = 150000;  // N
    int horizon = 150;                      // T
    int model_rollouts = 400;               // M
    int rollout_steps = 1;                  // K
    int batch_size = 256;                   // B
    double gamma = 0.99;
    double lr = 1e-3;
    double tau = 0.005;
    std::int64_t buffer_capacity = 0;  // 0 = unlimited
    int updates_per_env_step = 5;      // G

    // model
    std::string model = "gp";  // gp | ensemble
    int subsample_cap = 500;
    int mean_epochs = 10;
    int mean_batch = 64;
    double mean_lr = 1e-3;
    int kernel_steps = 50;
    double kernel_lr = 0.01;
    bool joint_cov = true;  // false: zero state-reward cross covariance
    int ensemble_size = 7;
    int ensemble_epochs = 10;
    double logvar_min = -10.0;
    double logvar_max = 0.5;
    int model_hidden_layers = 4;
    int model_hidden_units = 200;
    std::string model_activation = "silu";

    // policy
    std::string policy = "sac";  // sac | ddpg
    int policy_hidden_layers = 2;
    int policy_hidden_units = 256;
    bool ddpg_explore_noise = true;
    double ddpg_noise_start = 1.0;
    double ddpg_noise_end = 0.1;

    // evaluation and persistence
    int eval_every_episodes = 5;
    int eval_episodes = 5;
    int checkpoint_keep = 3;

    // environment knobs
    double arm_action_penalty = 0.1;
    bool arm_literal_penalty_sign = false;
    std::vector<std::string> maze_grid;  // optional ASCII override

    void validate() const;  // throws ConfigError
};

// Layering: built-in defaults <- file "defaults" block <- selected preset
// block <- KEY=VAL overrides. Unknown keys are rejected. The preset is chosen
// by the file's "preset" key or a preset=NAME override.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);
RunConfig config_from_json_text(const std::string& text,
                                const std::vector<std::string>& overrides);

/// Fully-resolved flat snapshot with sorted keys; re-parses to an identical config.
std::string canonical_json(const RunConfig& cfg);
RunConfig parse_canonical_json(const std::string& text);

std::vector<std::string> known_config_keys();

}  // namespace hotgp
