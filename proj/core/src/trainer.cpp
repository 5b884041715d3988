#include "hotgp/trainer.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/mvnormal.hpp"
#include "hotgp/rng.hpp"
#include "hotgp/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace hotgp {

namespace fs = std::filesystem;

namespace {

constexpr char kCheckpointMagic[] = "HOTGPCK1";

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Vector make_model_input(const EnvSpec& spec, const Vector& s, const Vector& a) {
    Vector x(spec.obs_dim + spec.action_dim);
    x << s, a;
    return x;
}

Vector make_model_target(const EnvSpec& spec, const Vector& s, const Vector& s_next,
                         double r) {
    const auto& dyn = spec.dynamic_indices;
    Vector y(static_cast<Eigen::Index>(dyn.size()) + 1);
    for (std::size_t i = 0; i < dyn.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = s_next[dyn[i]] - s[dyn[i]];
    }
    y[y.size() - 1] = r;
    return y;
}

// Apply a dynamic-component delta and clip to the observation box; static
// components pass through unchanged.
Vector apply_delta(const EnvSpec& spec, const Vector& s, const Vector& delta) {
    Vector out = s;
    const auto& dyn = spec.dynamic_indices;
    for (std::size_t i = 0; i < dyn.size(); ++i) {
        const int idx = dyn[i];
        const double v = s[idx] + delta[static_cast<Eigen::Index>(i)];
        out[idx] = std::min(std::max(v, spec.obs_low[idx]), spec.obs_high[idx]);
    }
    return out;
}

std::unique_ptr<Env> build_env(const RunConfig& cfg) {
    EnvOptions opts;
    opts.horizon = cfg.horizon;
    opts.arm_action_penalty = cfg.arm_action_penalty;
    opts.arm_literal_penalty_sign = cfg.arm_literal_penalty_sign;
    opts.maze_grid_override = cfg.maze_grid;
    return make_env(cfg.env, opts);
}

std::unique_ptr<JointModel> build_model(const RunConfig& cfg, const EnvSpec& spec) {
    const int input_dim = spec.obs_dim + spec.action_dim;
    const int output_dim = static_cast<int>(spec.dynamic_indices.size()) + 1;
    if (cfg.model == "gp") {
        GpConfig gp;
        gp.subsample_cap = cfg.subsample_cap;
        gp.mean_epochs = cfg.mean_epochs;
        gp.mean_batch = cfg.mean_batch;
        gp.mean_lr = cfg.mean_lr;
        gp.kernel_steps = cfg.kernel_steps;
        gp.kernel_lr = cfg.kernel_lr;
        gp.joint_outputs = cfg.joint_cov;
        gp.hidden_layers = cfg.model_hidden_layers;
        gp.hidden_units = cfg.model_hidden_units;
        gp.activation = activation_from_string(cfg.model_activation);
        return std::make_unique<GpJointModel>(input_dim, output_dim, gp);
    }
    EnsembleConfig ens;
    ens.members = cfg.ensemble_size;
    ens.epochs = cfg.ensemble_epochs;
    ens.batch = cfg.mean_batch;
    ens.lr = cfg.mean_lr;
    ens.logvar_min = cfg.logvar_min;
    ens.logvar_max = cfg.logvar_max;
    ens.hidden_layers = cfg.model_hidden_layers;
    ens.hidden_units = cfg.model_hidden_units;
    ens.activation = activation_from_string(cfg.model_activation);
    return std::make_unique<EnsembleJointModel>(input_dim, output_dim, ens);
}

std::unique_ptr<PolicyAgent> build_policy(const RunConfig& cfg, const EnvSpec& spec) {
    Rng rng = Rng::substream(cfg.seed, "policy_init");
    if (cfg.policy == "sac") {
        SacConfig sac;
        sac.lr = cfg.lr;
        sac.gamma = cfg.gamma;
        sac.tau = cfg.tau;
        sac.hidden_layers = cfg.policy_hidden_layers;
        sac.hidden_units = cfg.policy_hidden_units;
        return std::make_unique<SacAgent>(spec.obs_dim, spec.action_dim, sac, rng);
    }
    DdpgConfig ddpg;
    ddpg.lr = cfg.lr;
    ddpg.gamma = cfg.gamma;
    ddpg.tau = cfg.tau;
    ddpg.hidden_layers = cfg.policy_hidden_layers;
    ddpg.hidden_units = cfg.policy_hidden_units;
    ddpg.explore_noise = cfg.ddpg_explore_noise;
    ddpg.noise_start = cfg.ddpg_noise_start;
    ddpg.noise_end = cfg.ddpg_noise_end;
    return std::make_unique<DdpgAgent>(spec.obs_dim, spec.action_dim, ddpg, rng);
}

}  // namespace

EvalResult evaluate(const PolicyAgent& policy, const Env& env_proto, int episodes,
                    Rng& rng) {
    if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        auto env = env_proto.clone();
        Vector s = env->reset(rng);
        double ret = 0.0;
        for (int t = 0; t < env->spec().horizon; ++t) {
            const Vector a = policy.act(s, /*explore=*/false, rng);
            StepResult sr = env->step(a);
            ret += sr.reward;
            s = std::move(sr.obs);
            if (sr.done) break;
        }
        returns.push_back(ret);
    }
    const double n = static_cast<double>(returns.size());
    const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
    double varsum = 0.0;
    for (double r : returns) varsum += (r - mean) * (r - mean);
    return {mean, std::sqrt(varsum / n)};
}

std::vector<Transition> hallucinate_rollout(const JointModel& model,
                                            const PolicyAgent& policy, StrategyKind kind,
                                            const RunConfig& cfg, const Env& env,
                                            const Vector& s0, double r_min, Rng& rng) {
    if (!model.fitted()) throw NotFittedError("hallucinate_rollout: model not fitted");
    const EnvSpec& spec = env.spec();
    const int p_dyn = static_cast<int>(spec.dynamic_indices.size());

    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(cfg.rollout_steps));
    Vector s = s0;
    for (int k = 0; k < cfg.rollout_steps; ++k) {
        const Vector a = policy.act(s, /*explore=*/true, rng);
        const JointPrediction pred = model.predict(make_model_input(spec, s, a));

        HallucinationResult h;
        switch (kind) {
            case StrategyKind::Greedy:
                h = hallucinate_greedy(pred);
                break;
            case StrategyKind::GreedyKnownReward: {
                h = hallucinate_greedy(pred);
                const Vector s_next = apply_delta(spec, s, h.state_delta);
                h.reward = env.reward_oracle(s, a, s_next);
                break;
            }
            case StrategyKind::HotGp:
                h = hallucinate_hotgp(pred, r_min, rng);
                break;
            case StrategyKind::ThompsonSampling:
                h = hallucinate_thompson(pred, r_min, rng);
                break;
            case StrategyKind::OptimisticDiagonal:
                h = hallucinate_optimistic_diagonal(pred, r_min, rng);
                break;
            case StrategyKind::HucrlApprox: {
                // Candidates scored by the model's reward head conditioned on
                // the candidate state delta.
                std::vector<int> state_idx(static_cast<std::size_t>(p_dyn));
                std::iota(state_idx.begin(), state_idx.end(), 0);
                const MvNormal joint(pred.mean, pred.cov);
                const auto score = [&](const Vector& delta) {
                    return gaussian_condition(joint, state_idx, delta).mean[0];
                };
                h = hallucinate_hucrl(pred, score, pred.mean[pred.reward_index()],
                                      cfg.hucrl_beta, cfg.hucrl_candidates, rng);
                break;
            }
            case StrategyKind::HucrlKnownReward: {
                // Candidates scored by the true reward at (s_j, pi(s_j)); the
                // stored reward is the oracle value of the chosen transition.
                const auto score = [&](const Vector& delta) {
                    const Vector cand = apply_delta(spec, s, delta);
                    const Vector ca = policy.act(cand, /*explore=*/false, rng);
                    return env.reward_oracle(cand, ca, cand);
                };
                h = hallucinate_hucrl(pred, score, 0.0, cfg.hucrl_beta,
                                      cfg.hucrl_candidates, rng);
                const Vector s_next = apply_delta(spec, s, h.state_delta);
                h.reward = env.reward_oracle(s, a, s_next);
                break;
            }
        }

        Vector s_next = apply_delta(spec, s, h.state_delta);
        out.push_back({s, a, s_next, h.reward});
        s = std::move(s_next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(RunConfig cfg, std::string run_dir)
    : cfg_(std::move(cfg)),
      run_dir_(std::move(run_dir)),
      strategy_(strategy_from_string(cfg_.strategy)),
      d_env_(cfg_.buffer_capacity),
      d_model_(cfg_.buffer_capacity) {
    cfg_.validate();
    schedule_.r_min_start = cfg_.r_min_start;
    schedule_.r_min_end = cfg_.r_min_end;
    schedule_.total_env_steps = cfg_.total_env_steps;
    env_ = build_env(cfg_);
    model_ = build_model(cfg_, env_->spec());
    policy_ = build_policy(cfg_, env_->spec());
    wall_start_ = now_seconds();
}

Vector Trainer::model_input(const Vector& s, const Vector& a) const {
    return make_model_input(env_->spec(), s, a);
}

Vector Trainer::model_target(const Vector& s, const Vector& s_next, double r) const {
    return make_model_target(env_->spec(), s, s_next, r);
}

Vector Trainer::compose_next_state(const Vector& s, const Vector& delta) const {
    return apply_delta(env_->spec(), s, delta);
}

void Trainer::initialize() {
    fs::create_directories(fs::path(run_dir_) / "checkpoints");
    std::ofstream cfg_out(fs::path(run_dir_) / "config.json", std::ios::trunc);
    cfg_out << canonical_json(cfg_);
    write_metrics_file();
}

void Trainer::hallucination_phase(double r_min) {
    for (int m = 0; m < cfg_.model_rollouts; ++m) {
        Rng rng = Rng::substream(cfg_.seed, "hallucinate",
                                 static_cast<std::uint64_t>(episode_),
                                 static_cast<std::uint64_t>(m));
        const Transition& start = d_env_[rng.uniform_index(d_env_.size())];
        auto rollout = hallucinate_rollout(*model_, *policy_, strategy_, cfg_, *env_,
                                           start.s, r_min, rng);
        for (auto& t : rollout) d_model_.push(std::move(t));
    }
}

void Trainer::policy_phase() {
    if (d_model_.empty()) return;
    const std::int64_t updates =
        static_cast<std::int64_t>(cfg_.horizon) * cfg_.updates_per_env_step;
    for (std::int64_t u = 0; u < updates; ++u) {
        Rng rng = Rng::substream(cfg_.seed, "policy_update",
                                 static_cast<std::uint64_t>(episode_),
                                 static_cast<std::uint64_t>(u));
        const Batch batch = sample_batch(d_model_, cfg_.batch_size, rng);
        policy_->update(batch, rng);
    }
}

void Trainer::real_episode_phase() {
    Rng reset_rng =
        Rng::substream(cfg_.seed, "env_reset", static_cast<std::uint64_t>(episode_));
    Vector s = env_->reset(reset_rng);
    const bool random_actions = (episode_ == 0);
    const int q = env_->spec().action_dim;

    double nll_sum = 0.0;
    int nll_count = 0;
    for (int t = 0; t < cfg_.horizon; ++t) {
        Rng arng = Rng::substream(cfg_.seed, "explore", static_cast<std::uint64_t>(episode_),
                                  static_cast<std::uint64_t>(t));
        Vector a(q);
        if (random_actions) {
            for (int j = 0; j < q; ++j) a[j] = arng.uniform(-1.0, 1.0);
        } else {
            a = policy_->act(s, /*explore=*/true, arng);
        }
        StepResult sr = env_->step(a);
        if (model_->fitted()) {
            // Prequential score: the previous refit judged on fresh data.
            nll_sum += model_->nll(model_input(s, a), model_target(s, sr.obs, sr.reward));
            nll_count += 1;
        }
        d_env_.push({std::move(s), std::move(a), sr.obs, sr.reward});
        s = std::move(sr.obs);
    }
    env_steps_ += cfg_.horizon;
    last_nll_ = (nll_count > 0) ? nll_sum / nll_count : std::nan("");
}

void Trainer::refit_phase() {
    Rng rng =
        Rng::substream(cfg_.seed, "model_fit", static_cast<std::uint64_t>(episode_));
    const std::int64_t n = d_env_.size();
    const EnvSpec& spec = env_->spec();
    Matrix x(n, spec.obs_dim + spec.action_dim);
    Matrix y(n, static_cast<Eigen::Index>(spec.dynamic_indices.size()) + 1);
    for (std::int64_t i = 0; i < n; ++i) {
        const Transition& t = d_env_[i];
        x.row(i) = make_model_input(spec, t.s, t.a);
        y.row(i) = make_model_target(spec, t.s, t.s_next, t.r);
    }
    model_->fit(x, y, rng);
}

void Trainer::run_one_iteration() {
    const double r_min = r_min_at(schedule_, env_steps_);
    if (model_->fitted() && !d_env_.empty()) {
        hallucination_phase(r_min);
        policy_phase();
    }
    real_episode_phase();
    refit_phase();
    episode_ += 1;
    policy_->set_progress(static_cast<double>(env_steps_) /
                          static_cast<double>(cfg_.total_env_steps));
    if (episode_ % cfg_.eval_every_episodes == 0 || finished()) {
        eval_and_persist();
    }
}

void Trainer::eval_and_persist() {
    Rng erng = Rng::substream(cfg_.seed, "eval", static_cast<std::uint64_t>(episode_));
    const EvalResult ev = evaluate(*policy_, *env_, cfg_.eval_episodes, erng);
    MetricsRow row;
    row.env_steps = env_steps_;
    row.mean_eval_return = ev.mean;
    row.eval_return_std = ev.stddev;
    row.model_nll = last_nll_;
    row.r_min = r_min_at(schedule_, env_steps_);
    row.wall_seconds = wall_offset_ + (now_seconds() - wall_start_);
    metrics_.push_back(row);
    write_metrics_file();
    save_checkpoint();
    prune_checkpoints();
}

void Trainer::write_metrics_file() const {
    write_metrics_csv((fs::path(run_dir_) / "metrics.csv").string(), metrics_);
}

void Trainer::save_checkpoint() const {
    const fs::path dir =
        fs::path(run_dir_) / "checkpoints" / ("step_" + std::to_string(env_steps_));
    fs::create_directories(dir);
    std::ofstream os(dir / "state.bin", std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint in " + dir.string());
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    io::write_string(os, canonical_json(cfg_));
    io::write_i64(os, episode_);
    io::write_i64(os, env_steps_);
    io::write_f64(os, last_nll_);
    io::write_f64(os, metrics_.empty() ? 0.0 : metrics_.back().wall_seconds);
    d_env_.save(os);
    d_model_.save(os);
    policy_->save(os);
    model_->save(os);
    io::write_u64(os, metrics_.size());
    for (const auto& row : metrics_) {
        io::write_i64(os, row.env_steps);
        io::write_f64(os, row.mean_eval_return);
        io::write_f64(os, row.eval_return_std);
        io::write_f64(os, row.model_nll);
        io::write_f64(os, row.r_min);
        io::write_f64(os, row.wall_seconds);
    }
}

void Trainer::prune_checkpoints() const {
    const fs::path root = fs::path(run_dir_) / "checkpoints";
    std::vector<std::pair<std::int64_t, fs::path>> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("step_", 0) == 0) {
            dirs.emplace_back(std::stoll(name.substr(5)), entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    while (static_cast<int>(dirs.size()) > cfg_.checkpoint_keep) {
        fs::remove_all(dirs.front().second);
        dirs.erase(dirs.begin());
    }
}

bool Trainer::load_latest_checkpoint() {
    const fs::path root = fs::path(run_dir_) / "checkpoints";
    if (!fs::exists(root)) return false;
    std::int64_t best = -1;
    fs::path best_path;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("step_", 0) == 0) {
            const std::int64_t steps = std::stoll(name.substr(5));
            if (steps > best) {
                best = steps;
                best_path = entry.path();
            }
        }
    }
    if (best < 0) return false;

    std::ifstream is(best_path / "state.bin", std::ios::binary);
    if (!is) throw ConfigError("cannot read checkpoint " + best_path.string());
    char magic[sizeof(kCheckpointMagic) - 1];
    is.read(magic, sizeof magic);
    if (!is || std::string(magic, sizeof magic) != kCheckpointMagic) {
        throw ConfigError("bad checkpoint magic in " + best_path.string());
    }
    const std::string cfg_json = io::read_string(is);
    const RunConfig stored = parse_canonical_json(cfg_json);
    if (canonical_json(stored) != canonical_json(cfg_)) {
        throw ConfigError("checkpoint config does not match run config");
    }
    episode_ = io::read_i64(is);
    env_steps_ = io::read_i64(is);
    last_nll_ = io::read_f64(is);
    wall_offset_ = io::read_f64(is);
    wall_start_ = now_seconds();
    d_env_.load(is);
    d_model_.load(is);
    policy_->load(is);
    model_->load(is);
    const auto rows = io::read_u64(is);
    metrics_.clear();
    for (std::uint64_t i = 0; i < rows; ++i) {
        MetricsRow row;
        row.env_steps = io::read_i64(is);
        row.mean_eval_return = io::read_f64(is);
        row.eval_return_std = io::read_f64(is);
        row.model_nll = io::read_f64(is);
        row.r_min = io::read_f64(is);
        row.wall_seconds = io::read_f64(is);
        metrics_.push_back(row);
    }
    policy_->set_progress(static_cast<double>(env_steps_) /
                          static_cast<double>(cfg_.total_env_steps));
    write_metrics_file();
    return true;
}

void Trainer::run_to_completion() {
    try {
        while (!finished()) run_one_iteration();
    } catch (const std::exception& e) {
        std::ofstream err(fs::path(run_dir_) / "error.log", std::ios::app);
        err << "run aborted at env_steps=" << env_steps_ << ": " << e.what() << '\n';
        throw;
    }
}

RunResult run_training(const RunConfig& cfg, const std::string& out_dir) {
    Trainer trainer(cfg, out_dir);
    trainer.initialize();
    trainer.run_to_completion();
    return {trainer.run_dir(), trainer.metrics()};
}

RunResult resume_training(const std::string& run_dir) {
    std::ifstream cfg_in(fs::path(run_dir) / "config.json");
    if (!cfg_in) throw ConfigError("resume: no config.json in " + run_dir);
    std::ostringstream buf;
    buf << cfg_in.rdbuf();
    const RunConfig cfg = parse_canonical_json(buf.str());
    Trainer trainer(cfg, run_dir);
    if (!trainer.load_latest_checkpoint()) {
        throw ConfigError("resume: no checkpoint found in " + run_dir);
    }
    trainer.run_to_completion();
    return {trainer.run_dir(), trainer.metrics()};
}

}  // namespace hotgp
