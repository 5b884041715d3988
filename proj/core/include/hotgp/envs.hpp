#pragma once

#include "hotgp/linalg.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hotgp {

class Rng;

struct EnvSpec {
    std::string name;
    int obs_dim = 0;
    int action_dim = 0;
    int horizon = 150;
    std::vector<int> dynamic_indices;  // observation components the model predicts
    Vector obs_low, obs_high;          // clipping bounds for hallucinated states
    Vector action_low, action_high;
};

struct StepResult {
    Vector obs;
    double reward = 0.0;
    bool done = false;
};

// Episodic environment. reset() starts a fresh episode; step() advances one
// tick and flags done at the horizon. reward_oracle evaluates the reward
// function of a transition without advancing state.
class Env {
public:
    virtual ~Env() = default;
    virtual const EnvSpec& spec() const = 0;
    virtual Vector reset(Rng& rng) = 0;
    virtual StepResult step(const Vector& action) = 0;
    virtual double reward_oracle(const Vector& s, const Vector& a,
                                 const Vector& s_next) const = 0;
    virtual std::unique_ptr<Env> clone() const = 0;

    /// Lifetime count of real step() calls, for interaction accounting.
    std::int64_t step_count() const { return steps_taken_; }

protected:
    std::int64_t steps_taken_ = 0;
};

struct EnvOptions {
    int horizon = 150;
    double arm_action_penalty = 0.1;
    // Keeps the written reward form whose penalty term grows reward with
    // action magnitude; off by default in favor of a true penalty.
    bool arm_literal_penalty_sign = false;
    std::vector<std::string> maze_grid_override;
};

std::unique_ptr<Env> make_env(const std::string& name, const EnvOptions& opts);

const std::vector<std::string>& u_maze_grid();
const std::vector<std::string>& medium_maze_grid();

// Point agent with per-axis velocity actions in a unit-cell grid; sparse
// reward of 1 within the goal threshold. Collision is axis-separated: the x
// move is applied first, a blocked axis keeps its coordinate.
class MazeEnv : public Env {
public:
    MazeEnv(std::string name, std::vector<std::string> grid, int horizon);

    const EnvSpec& spec() const override { return spec_; }
    Vector reset(Rng& rng) override;
    StepResult step(const Vector& action) override;
    double reward_oracle(const Vector& s, const Vector& a,
                         const Vector& s_next) const override;
    std::unique_ptr<Env> clone() const override;

    bool wall_at(double x, double y) const;
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    static constexpr double kGoalThreshold = 0.5;

private:
    Vector observation() const;

    EnvSpec spec_;
    std::vector<std::string> grid_;
    int rows_ = 0, cols_ = 0;
    double x_ = 0, y_ = 0;
    double goal_x_ = 0, goal_y_ = 0;
    int start_row_ = 0, start_col_ = 0;
    int t_ = 0;
};

// Coverage of a [-1,1]^2 arena discretized to a grid; visiting a fresh cell
// pays the mixture density of three per-episode Gaussian bumps, revisits pay
// nothing. Double-integrator motion with clipped velocity.
class CoverageEnv : public Env {
public:
    explicit CoverageEnv(int horizon);

    const EnvSpec& spec() const override { return spec_; }
    Vector reset(Rng& rng) override;
    StepResult step(const Vector& action) override;
    double reward_oracle(const Vector& s, const Vector& a,
                         const Vector& s_next) const override;
    std::unique_ptr<Env> clone() const override;

    static double mixture_pdf(double x, double y, const Matrix& centers);
    bool visited_cell(double x, double y) const;

    static constexpr int kGridSize = 20;
    static constexpr double kSigma2 = 0.05;
    static constexpr double kAccelScale = 0.05;
    static constexpr double kVelMax = 0.1;

private:
    Vector observation() const;
    static int cell_index(double coord);

    EnvSpec spec_;
    Matrix centers_;  // 3 x 2
    std::vector<char> visited_;
    double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
    int t_ = 0;
};

// Two-link planar arm under joint-velocity control. Sparse distance reward
// within an end-effector threshold, minus an action-magnitude penalty.
class ArmEnv : public Env {
public:
    ArmEnv(int horizon, double action_penalty, bool literal_penalty_sign);

    const EnvSpec& spec() const override { return spec_; }
    Vector reset(Rng& rng) override;
    StepResult step(const Vector& action) override;
    double reward_oracle(const Vector& s, const Vector& a,
                         const Vector& s_next) const override;
    std::unique_ptr<Env> clone() const override;

    static constexpr double kLink1 = 0.5;
    static constexpr double kLink2 = 0.5;
    static constexpr double kThreshold = 0.2;
    static constexpr double kDt = 0.15;

    double reward_for(const Vector& action, double ee_x, double ee_y, double gx,
                      double gy) const;

private:
    Vector observation() const;

    EnvSpec spec_;
    double rho_;
    bool literal_sign_;
    double theta1_ = 0, theta2_ = 0;
    double goal_x_ = 0, goal_y_ = 0;
    int t_ = 0;
};

}  // namespace hotgp
