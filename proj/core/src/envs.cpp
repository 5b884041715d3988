#include "hotgp/envs.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace hotgp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

Vector clip_action(const Vector& a, const EnvSpec& spec) {
    Vector out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out[i] = clip(a[i], spec.action_low[i], spec.action_high[i]);
    }
    return out;
}

double wrap_angle(double x) {
    double w = std::fmod(x + kPi, 2.0 * kPi);
    if (w <= 0.0) w += 2.0 * kPi;
    return w - kPi;  // (-pi, pi]
}

}  // namespace

const std::vector<std::string>& u_maze_grid() {
    static const std::vector<std::string> grid = {
        "#####",
        "#...#",
        "###.#",
        "#...#",
        "#####",
    };
    return grid;
}

const std::vector<std::string>& medium_maze_grid() {
    static const std::vector<std::string> grid = {
        "########",
        "#..##..#",
        "#..#...#",
        "##...###",
        "#..#...#",
        "#.#..#.#",
        "#...#..#",
        "########",
    };
    return grid;
}

// ---------------------------------------------------------------------------
// MazeEnv

MazeEnv::MazeEnv(std::string name, std::vector<std::string> grid, int horizon)
    : grid_(std::move(grid)) {
    rows_ = static_cast<int>(grid_.size());
    if (rows_ < 3) throw ConfigError("maze grid: too few rows");
    cols_ = static_cast<int>(grid_.front().size());
    for (const auto& row : grid_) {
        if (static_cast<int>(row.size()) != cols_) {
            throw ConfigError("maze grid: ragged rows");
        }
        for (char c : row) {
            if (c != '#' && c != '.') throw ConfigError("maze grid: cells must be '#' or '.'");
        }
    }
    for (int c = 0; c < cols_; ++c) {
        if (grid_.front()[static_cast<std::size_t>(c)] != '#' ||
            grid_.back()[static_cast<std::size_t>(c)] != '#') {
            throw ConfigError("maze grid: boundary must be walled");
        }
    }
    for (int r = 0; r < rows_; ++r) {
        if (grid_[static_cast<std::size_t>(r)].front() != '#' ||
            grid_[static_cast<std::size_t>(r)].back() != '#') {
            throw ConfigError("maze grid: boundary must be walled");
        }
    }

    // Fixed start cell: the first free cell scanning up from the bottom-left.
    start_row_ = -1;
    for (int r = rows_ - 2; r >= 1 && start_row_ < 0; --r) {
        for (int c = 1; c < cols_ - 1; ++c) {
            if (grid_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '.') {
                start_row_ = r;
                start_col_ = c;
                break;
            }
        }
    }
    if (start_row_ < 0) throw ConfigError("maze grid: no free cell");

    spec_.name = std::move(name);
    spec_.obs_dim = 4;
    spec_.action_dim = 2;
    spec_.horizon = horizon;
    spec_.dynamic_indices = {0, 1};
    spec_.obs_low = Vector::Zero(4);
    spec_.obs_high = Vector(4);
    spec_.obs_high << cols_, rows_, cols_, rows_;
    spec_.action_low = Vector::Constant(2, -1.0);
    spec_.action_high = Vector::Constant(2, 1.0);
}

bool MazeEnv::wall_at(double x, double y) const {
    const int c = static_cast<int>(std::floor(x));
    const int r = static_cast<int>(std::floor(y));
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) return true;
    return grid_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '#';
}

Vector MazeEnv::observation() const {
    Vector obs(4);
    obs << x_, y_, goal_x_, goal_y_;
    return obs;
}

Vector MazeEnv::reset(Rng& rng) {
    x_ = start_col_ + 0.5;
    y_ = start_row_ + 0.5;

    std::vector<std::pair<int, int>> free_cells;
    for (int r = 1; r < rows_ - 1; ++r) {
        for (int c = 1; c < cols_ - 1; ++c) {
            if (grid_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '.' &&
                !(r == start_row_ && c == start_col_)) {
                free_cells.emplace_back(r, c);
            }
        }
    }
    const auto pick = free_cells[static_cast<std::size_t>(
        rng.uniform_index(static_cast<std::int64_t>(free_cells.size())))];
    goal_y_ = pick.first + 0.5;
    goal_x_ = pick.second + 0.5;
    t_ = 0;
    return observation();
}

StepResult MazeEnv::step(const Vector& action) {
    steps_taken_ += 1;
    const Vector v = clip_action(action, spec_);
    const double nx = x_ + v[0];
    if (!wall_at(nx, y_)) x_ = nx;
    const double ny = y_ + v[1];
    if (!wall_at(x_, ny)) y_ = ny;

    const double dx = x_ - goal_x_;
    const double dy = y_ - goal_y_;
    const double reward = (std::sqrt(dx * dx + dy * dy) < kGoalThreshold) ? 1.0 : 0.0;
    t_ += 1;
    return {observation(), reward, t_ >= spec_.horizon};
}

double MazeEnv::reward_oracle(const Vector& /*s*/, const Vector& /*a*/,
                              const Vector& s_next) const {
    const double dx = s_next[0] - s_next[2];
    const double dy = s_next[1] - s_next[3];
    return (std::sqrt(dx * dx + dy * dy) < kGoalThreshold) ? 1.0 : 0.0;
}

std::unique_ptr<Env> MazeEnv::clone() const { return std::make_unique<MazeEnv>(*this); }

// ---------------------------------------------------------------------------
// CoverageEnv

CoverageEnv::CoverageEnv(int horizon)
    : centers_(Matrix::Zero(3, 2)),
      visited_(static_cast<std::size_t>(kGridSize * kGridSize), 0) {
    spec_.name = "coverage";
    spec_.obs_dim = 19;
    spec_.action_dim = 2;
    spec_.horizon = horizon;
    spec_.dynamic_indices.resize(13);
    for (int i = 0; i < 13; ++i) spec_.dynamic_indices[static_cast<std::size_t>(i)] = i;

    spec_.obs_low = Vector(19);
    spec_.obs_high = Vector(19);
    // pos, vel, own cell value, 8 neighbor values, 3 centers
    const double peak = 3.0 / (2.0 * kPi * kSigma2);  // all bumps stacked
    spec_.obs_low << -1, -1, -kVelMax, -kVelMax, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, -1, -1, -1,
        -1, -1;
    spec_.obs_high << 1, 1, kVelMax, kVelMax, peak, peak, peak, peak, peak, peak, peak,
        peak, peak, 1, 1, 1, 1, 1, 1;
    spec_.action_low = Vector::Constant(2, -1.0);
    spec_.action_high = Vector::Constant(2, 1.0);
}

double CoverageEnv::mixture_pdf(double x, double y, const Matrix& centers) {
    const double norm = 1.0 / (2.0 * kPi * kSigma2);
    double acc = 0.0;
    for (int i = 0; i < centers.rows(); ++i) {
        const double dx = x - centers(i, 0);
        const double dy = y - centers(i, 1);
        acc += norm * std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma2));
    }
    return acc / static_cast<double>(centers.rows());
}

int CoverageEnv::cell_index(double coord) {
    const int idx = static_cast<int>(std::floor((coord + 1.0) * 0.5 * kGridSize));
    return std::clamp(idx, 0, kGridSize - 1);
}

bool CoverageEnv::visited_cell(double x, double y) const {
    return visited_[static_cast<std::size_t>(cell_index(y) * kGridSize + cell_index(x))] !=
           0;
}

Vector CoverageEnv::observation() const {
    Vector obs(19);
    obs[0] = px_;
    obs[1] = py_;
    obs[2] = vx_;
    obs[3] = vy_;
    obs[4] = mixture_pdf(px_, py_, centers_);

    // Neighbor cell values at cell centers, row-major around the agent's cell;
    // off-grid neighbors read zero.
    const int cx = cell_index(px_);
    const int cy = cell_index(py_);
    const double cell = 2.0 / kGridSize;
    int at = 5;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || nx >= kGridSize || ny < 0 || ny >= kGridSize) {
                obs[at++] = 0.0;
            } else {
                const double wx = -1.0 + (nx + 0.5) * cell;
                const double wy = -1.0 + (ny + 0.5) * cell;
                obs[at++] = mixture_pdf(wx, wy, centers_);
            }
        }
    }
    obs.segment(13, 2) = centers_.row(0);
    obs.segment(15, 2) = centers_.row(1);
    obs.segment(17, 2) = centers_.row(2);
    return obs;
}

Vector CoverageEnv::reset(Rng& rng) {
    px_ = rng.uniform(-0.95, 0.95);
    py_ = rng.uniform(-0.95, 0.95);
    vx_ = vy_ = 0.0;
    for (int i = 0; i < 3; ++i) {
        centers_(i, 0) = rng.uniform(-0.8, 0.8);
        centers_(i, 1) = rng.uniform(-0.8, 0.8);
    }
    std::fill(visited_.begin(), visited_.end(), 0);
    t_ = 0;
    return observation();
}

StepResult CoverageEnv::step(const Vector& action) {
    steps_taken_ += 1;
    const Vector a = clip_action(action, spec_);
    vx_ = clip(vx_ + kAccelScale * a[0], -kVelMax, kVelMax);
    vy_ = clip(vy_ + kAccelScale * a[1], -kVelMax, kVelMax);
    px_ = clip(px_ + vx_, -1.0, 1.0);
    py_ = clip(py_ + vy_, -1.0, 1.0);

    const auto cell =
        static_cast<std::size_t>(cell_index(py_) * kGridSize + cell_index(px_));
    double reward = 0.0;
    if (visited_[cell] == 0) {
        reward = mixture_pdf(px_, py_, centers_);
        visited_[cell] = 1;
    }
    t_ += 1;
    return {observation(), reward, t_ >= spec_.horizon};
}

double CoverageEnv::reward_oracle(const Vector& /*s*/, const Vector& /*a*/,
                                  const Vector& s_next) const {
    // Visitation is judged against this instance's current bitmap; position
    // and centers come from the queried observation.
    if (visited_cell(s_next[0], s_next[1])) return 0.0;
    Matrix centers(3, 2);
    centers.row(0) = s_next.segment(13, 2);
    centers.row(1) = s_next.segment(15, 2);
    centers.row(2) = s_next.segment(17, 2);
    return mixture_pdf(s_next[0], s_next[1], centers);
}

std::unique_ptr<Env> CoverageEnv::clone() const {
    return std::make_unique<CoverageEnv>(*this);
}

// ---------------------------------------------------------------------------
// ArmEnv

ArmEnv::ArmEnv(int horizon, double action_penalty, bool literal_penalty_sign)
    : rho_(action_penalty), literal_sign_(literal_penalty_sign) {
    spec_.name = "sparse_arm";
    spec_.obs_dim = 8;
    spec_.action_dim = 2;
    spec_.horizon = horizon;
    spec_.dynamic_indices = {0, 1, 2, 3, 6, 7};
    spec_.obs_low = Vector::Constant(8, -1.0);
    spec_.obs_high = Vector::Constant(8, 1.0);
    spec_.action_low = Vector::Constant(2, -1.0);
    spec_.action_high = Vector::Constant(2, 1.0);
}

Vector ArmEnv::observation() const {
    const double ee_x = kLink1 * std::cos(theta1_) + kLink2 * std::cos(theta1_ + theta2_);
    const double ee_y = kLink1 * std::sin(theta1_) + kLink2 * std::sin(theta1_ + theta2_);
    Vector obs(8);
    obs << std::cos(theta1_), std::sin(theta1_), std::cos(theta2_), std::sin(theta2_),
        goal_x_, goal_y_, ee_x, ee_y;
    return obs;
}

Vector ArmEnv::reset(Rng& rng) {
    theta1_ = rng.uniform(-kPi, kPi);
    theta2_ = rng.uniform(-kPi, kPi);
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    const double radius = rng.uniform(0.3, 0.95);
    goal_x_ = radius * std::cos(angle);
    goal_y_ = radius * std::sin(angle);
    t_ = 0;
    return observation();
}

double ArmEnv::reward_for(const Vector& action, double ee_x, double ee_y, double gx,
                          double gy) const {
    const double dx = ee_x - gx;
    const double dy = ee_y - gy;
    const double dist2 = dx * dx + dy * dy;
    const double r_dist =
        (std::sqrt(dist2) < kThreshold) ? std::exp(-dist2) : 0.0;
    const double cost = 1.0 - std::exp(-action.squaredNorm());
    return literal_sign_ ? r_dist + rho_ * cost : r_dist - rho_ * cost;
}

StepResult ArmEnv::step(const Vector& action) {
    steps_taken_ += 1;
    const Vector a = clip_action(action, spec_);
    theta1_ = wrap_angle(theta1_ + kDt * a[0]);
    theta2_ = wrap_angle(theta2_ + kDt * a[1]);
    Vector obs = observation();
    const double reward = reward_for(a, obs[6], obs[7], goal_x_, goal_y_);
    t_ += 1;
    return {std::move(obs), reward, t_ >= spec_.horizon};
}

double ArmEnv::reward_oracle(const Vector& /*s*/, const Vector& a,
                             const Vector& s_next) const {
    Vector clipped = clip_action(a, spec_);
    return reward_for(clipped, s_next[6], s_next[7], s_next[4], s_next[5]);
}

std::unique_ptr<Env> ArmEnv::clone() const { return std::make_unique<ArmEnv>(*this); }

// ---------------------------------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& name, const EnvOptions& opts) {
    if (name == "u_maze" || name == "medium_maze") {
        auto grid = opts.maze_grid_override.empty()
                        ? (name == "u_maze" ? u_maze_grid() : medium_maze_grid())
                        : opts.maze_grid_override;
        return std::make_unique<MazeEnv>(name, grid, opts.horizon);
    }
    if (name == "coverage") return std::make_unique<CoverageEnv>(opts.horizon);
    if (name == "sparse_arm") {
        return std::make_unique<ArmEnv>(opts.horizon, opts.arm_action_penalty,
                                        opts.arm_literal_penalty_sign);
    }
    throw ConfigError("unknown environment: " + name);
}

}  // namespace hotgp
