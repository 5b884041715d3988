#pragma once

#include "hotgp/jointmodel.hpp"

#include <cstdint>
#include <functional>
#include <string_view>

namespace hotgp {

class Rng;

// Linear annealing of the optimism quantile over total environment steps.
struct OptimismSchedule {
    double r_min_start = 0.1;
    double r_min_end = 0.5;
    std::int64_t total_env_steps = 1;
};

double r_min_at(const OptimismSchedule& schedule, std::int64_t env_steps);

enum class StrategyKind {
    Greedy,
    GreedyKnownReward,
    ThompsonSampling,
    HotGp,
    OptimisticDiagonal,
    HucrlApprox,
    HucrlKnownReward,
};

StrategyKind strategy_from_string(std::string_view name);
const char* strategy_name(StrategyKind kind);
bool strategy_uses_reward_oracle(StrategyKind kind);

// A hallucinated transition: the model-space state delta plus the reward the
// policy trains on. All rules are pure functions of (prediction, r_min, rng).
struct HallucinationResult {
    Vector state_delta;
    double reward = 0.0;
};

/// State conditional p(delta | r = rhat); degenerate reward variance falls
/// back to the state marginal.
MvNormal reward_conditional(const JointPrediction& pred, double rhat);

/// Posterior means for both heads.
HallucinationResult hallucinate_greedy(const JointPrediction& pred);

// Two-step optimistic Thompson sampling: draw the reward from its marginal
// truncated above the r_min quantile, then take the expected state under the
// reward-conditioned distribution.
HallucinationResult hallucinate_hotgp(const JointPrediction& pred, double r_min, Rng& rng);

/// As hallucinate_hotgp, but the next state is sampled from the conditional
/// rather than taking its expectation.
HallucinationResult hallucinate_thompson(const JointPrediction& pred, double r_min,
                                         Rng& rng);

/// Optimistic reward draw with the unconditioned mean state: the naive
/// baseline without joint structure. Coincides with hallucinate_hotgp
/// whenever the state-reward cross covariance is zero.
HallucinationResult hallucinate_optimistic_diagonal(const JointPrediction& pred,
                                                    double r_min, Rng& rng);

// H-UCRL sampling approximation: num_candidates deltas mu_s + beta*sigma_s o eta
// with eta ~ Uniform([-1,1]^p); the candidate maximizing candidate_score wins.
// reported_reward is the transition reward evaluated at the current (s, a).
HallucinationResult hallucinate_hucrl(
    const JointPrediction& pred,
    const std::function<double(const Vector& delta)>& candidate_score,
    double reported_reward, double beta, int num_candidates, Rng& rng);

}  // namespace hotgp
