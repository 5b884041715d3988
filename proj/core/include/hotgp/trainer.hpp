#pragma once

#include "hotgp/config.hpp"
#include "hotgp/envs.hpp"
#include "hotgp/jointmodel.hpp"
#include "hotgp/metrics.hpp"
#include "hotgp/policy.hpp"
#include "hotgp/strategies.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hotgp {

struct EvalResult {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Deterministic-mode policy over full fresh episodes; population std.
EvalResult evaluate(const PolicyAgent& policy, const Env& env_proto, int episodes,
                    Rng& rng);

// One K-step model rollout from s0 under the configured strategy. The env is
// consulted only for observation metadata and, for the known-reward
// strategies, its reward oracle; it is never stepped.
std::vector<Transition> hallucinate_rollout(const JointModel& model,
                                            const PolicyAgent& policy, StrategyKind kind,
                                            const RunConfig& cfg, const Env& env,
                                            const Vector& s0, double r_min, Rng& rng);

// The outer loop: hallucinate M rollouts branched from the real buffer,
// update the policy from model data, roll one real episode, refit the model,
// and periodically evaluate/checkpoint. All randomness is drawn from
// (seed, purpose, episode, index) substreams, so a run is a pure function of
// its config and restarts continue bit-exactly.
class Trainer {
public:
    Trainer(RunConfig cfg, std::string run_dir);

    void initialize();               // fresh run: directories, config snapshot
    bool load_latest_checkpoint();   // false when no checkpoint exists
    void run_to_completion();
    void run_one_iteration();
    bool finished() const { return env_steps_ >= cfg_.total_env_steps; }

    const RunConfig& config() const { return cfg_; }
    const std::string& run_dir() const { return run_dir_; }
    std::int64_t env_steps() const { return env_steps_; }
    std::int64_t episodes_done() const { return episode_; }
    const TransitionBuffer& env_buffer() const { return d_env_; }
    const TransitionBuffer& model_buffer() const { return d_model_; }
    const std::vector<MetricsRow>& metrics() const { return metrics_; }
    Env& env() { return *env_; }
    JointModel& model() { return *model_; }
    PolicyAgent& policy() { return *policy_; }

    Vector model_input(const Vector& s, const Vector& a) const;
    Vector model_target(const Vector& s, const Vector& s_next, double r) const;
    Vector compose_next_state(const Vector& s, const Vector& delta) const;

    void save_checkpoint() const;

private:
    void hallucination_phase(double r_min);
    void policy_phase();
    void real_episode_phase();
    void refit_phase();
    void eval_and_persist();
    void write_metrics_file() const;
    void prune_checkpoints() const;

    RunConfig cfg_;
    std::string run_dir_;
    OptimismSchedule schedule_;
    StrategyKind strategy_;

    std::unique_ptr<Env> env_;
    std::unique_ptr<JointModel> model_;
    std::unique_ptr<PolicyAgent> policy_;
    TransitionBuffer d_env_;
    TransitionBuffer d_model_;

    std::int64_t episode_ = 0;
    std::int64_t env_steps_ = 0;
    double last_nll_ = std::nan("");
    std::vector<MetricsRow> metrics_;
    double wall_start_ = 0.0;
    double wall_offset_ = 0.0;
};

struct RunResult {
    std::string run_dir;
    std::vector<MetricsRow> metrics;
};

RunResult run_training(const RunConfig& cfg, const std::string& out_dir);
RunResult resume_training(const std::string& run_dir);

}  // namespace hotgp
