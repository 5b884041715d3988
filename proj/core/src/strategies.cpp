#include "hotgp/strategies.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/mvnormal.hpp"
#include "hotgp/normal.hpp"
#include "hotgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hotgp {

double r_min_at(const OptimismSchedule& schedule, std::int64_t env_steps) {
    const double lo = std::min(schedule.r_min_start, schedule.r_min_end);
    const double hi = std::max(schedule.r_min_start, schedule.r_min_end);
    const double frac = static_cast<double>(env_steps) /
                        static_cast<double>(std::max<std::int64_t>(schedule.total_env_steps, 1));
    const double v = schedule.r_min_start + (schedule.r_min_end - schedule.r_min_start) * frac;
    return std::clamp(v, lo, hi);
}

StrategyKind strategy_from_string(std::string_view name) {
    if (name == "greedy") return StrategyKind::Greedy;
    if (name == "greedy_known_reward") return StrategyKind::GreedyKnownReward;
    if (name == "thompson") return StrategyKind::ThompsonSampling;
    if (name == "hotgp") return StrategyKind::HotGp;
    if (name == "optimistic_diagonal") return StrategyKind::OptimisticDiagonal;
    if (name == "hucrl_approx") return StrategyKind::HucrlApprox;
    if (name == "hucrl_known_reward") return StrategyKind::HucrlKnownReward;
    throw ConfigError("unknown strategy: " + std::string(name));
}

const char* strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Greedy: return "greedy";
        case StrategyKind::GreedyKnownReward: return "greedy_known_reward";
        case StrategyKind::ThompsonSampling: return "thompson";
        case StrategyKind::HotGp: return "hotgp";
        case StrategyKind::OptimisticDiagonal: return "optimistic_diagonal";
        case StrategyKind::HucrlApprox: return "hucrl_approx";
        case StrategyKind::HucrlKnownReward: return "hucrl_known_reward";
    }
    return "?";
}

bool strategy_uses_reward_oracle(StrategyKind kind) {
    return kind == StrategyKind::GreedyKnownReward || kind == StrategyKind::HucrlKnownReward;
}

namespace {

double reward_sigma(const JointPrediction& pred) {
    const int ri = pred.reward_index();
    return std::sqrt(std::max(pred.cov(ri, ri), 0.0));
}

}  // namespace

MvNormal reward_conditional(const JointPrediction& pred, double rhat) {
    const int ri = pred.reward_index();
    if (pred.cov(ri, ri) <= 0.0) {
        // Degenerate reward marginal: conditioning is uninformative.
        return MvNormal(pred.mean.head(ri),
                        pred.cov.topLeftCorner(ri, ri));
    }
    Vector observed(1);
    observed[0] = rhat;
    return gaussian_condition(MvNormal(pred.mean, pred.cov), {ri}, observed);
}

HallucinationResult hallucinate_greedy(const JointPrediction& pred) {
    const int ri = pred.reward_index();
    return {pred.mean.head(ri), pred.mean[ri]};
}

HallucinationResult hallucinate_hotgp(const JointPrediction& pred, double r_min, Rng& rng) {
    const int ri = pred.reward_index();
    const double rhat =
        truncated_normal_sample(pred.mean[ri], reward_sigma(pred), r_min, rng);
    return {reward_conditional(pred, rhat).mean, rhat};
}

HallucinationResult hallucinate_thompson(const JointPrediction& pred, double r_min,
                                         Rng& rng) {
    const int ri = pred.reward_index();
    const double rhat =
        truncated_normal_sample(pred.mean[ri], reward_sigma(pred), r_min, rng);
    const MvNormal cond = reward_conditional(pred, rhat);
    return {mvnormal_sample(cond, rng), rhat};
}

HallucinationResult hallucinate_optimistic_diagonal(const JointPrediction& pred,
                                                    double r_min, Rng& rng) {
    const int ri = pred.reward_index();
    const double rhat =
        truncated_normal_sample(pred.mean[ri], reward_sigma(pred), r_min, rng);
    return {pred.mean.head(ri), rhat};
}

HallucinationResult hallucinate_hucrl(
    const JointPrediction& pred,
    const std::function<double(const Vector& delta)>& candidate_score,
    double reported_reward, double beta, int num_candidates, Rng& rng) {
    if (num_candidates < 1) {
        throw std::invalid_argument("hallucinate_hucrl: need at least one candidate");
    }
    const int p = pred.state_dim();
    const Vector mu = pred.mean.head(p);
    const Vector sigma = pred.cov.diagonal().head(p).cwiseMax(0.0).cwiseSqrt();

    Vector best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < num_candidates; ++j) {
        Vector eta(p);
        for (int k = 0; k < p; ++k) eta[k] = rng.uniform(-1.0, 1.0);
        Vector cand = mu + beta * sigma.cwiseProduct(eta);
        const double score = candidate_score(cand);
        if (j == 0 || score > best_score) {
            best = std::move(cand);
            best_score = score;
        }
    }
    return {std::move(best), reported_reward};
}

}  // namespace hotgp
