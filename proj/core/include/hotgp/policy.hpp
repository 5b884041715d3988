#pragma once

#include "hotgp/linalg.hpp"
#include "hotgp/nn.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace hotgp {

class Rng;

struct Transition {
    Vector s;
    Vector a;
    Vector s_next;
    double r = 0.0;
};

// Ring buffer with uniform sampling; capacity 0 means unbounded. Eviction is
// exactly FIFO once full.
class TransitionBuffer {
public:
    explicit TransitionBuffer(std::int64_t capacity = 0);

    void push(Transition t);
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    std::int64_t capacity() const { return capacity_; }
    bool empty() const { return data_.empty(); }
    void clear();

    const Transition& operator[](std::int64_t i) const {
        return data_[static_cast<std::size_t>(i)];
    }
    const Transition& sample(Rng& rng) const;

    void save(std::ostream& os) const;
    void load(std::istream& is);

private:
    std::int64_t capacity_;
    std::int64_t cursor_ = 0;  // next slot to overwrite once full
    std::vector<Transition> data_;
};

struct Batch {
    Matrix s, a, s_next;
    Vector r;
    int size() const { return static_cast<int>(r.size()); }
};

Batch sample_batch(const TransitionBuffer& buffer, int batch_size, Rng& rng);

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double aux = 0.0;  // SAC temperature / DDPG exploration noise level
};

// Off-policy PolicySearch surface consumed by the training loop. Actions are
// tanh-squashed into [-1, 1]^q, matching every environment's action box.
class PolicyAgent {
public:
    virtual ~PolicyAgent() = default;
    virtual Vector act(const Vector& s, bool explore, Rng& rng) const = 0;
    virtual UpdateStats update(const Batch& batch, Rng& rng) = 0;
    virtual void set_progress(double /*fraction*/) {}
    virtual void save(std::ostream& os) const = 0;
    virtual void load(std::istream& is) = 0;
};

struct SacConfig {
    double lr = 1e-3;
    double gamma = 0.99;
    double tau = 0.005;
    int hidden_layers = 2;
    int hidden_units = 256;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

// Soft actor-critic: tanh-Gaussian actor, twin critics with Polyak-averaged
// targets, temperature tuned toward target entropy -action_dim.
class SacAgent : public PolicyAgent {
public:
    SacAgent(int obs_dim, int action_dim, SacConfig cfg, Rng& rng);

    Vector act(const Vector& s, bool explore, Rng& rng) const override;
    UpdateStats update(const Batch& batch, Rng& rng) override;
    void save(std::ostream& os) const override;
    void load(std::istream& is) override;

    double temperature() const;
    double target_entropy() const { return -static_cast<double>(action_dim_); }

    // Tanh-Gaussian density of an action under the current actor; inputs are
    // the pre-squash draw z and the state.
    double log_prob(const Vector& s, const Vector& z) const;

    // Reparameterized actor loss mean(alpha*logpi - min Q) with the Gaussian
    // noise supplied, and its exact actor-parameter gradients; the update step
    // and the finite-difference checks share this path.
    double actor_loss(const Matrix& s, const Matrix& noise, MlpGrads* grads,
                      Vector* logp_out = nullptr) const;

    Mlp& actor() { return actor_; }
    const Mlp& critic1() const { return q1_; }

private:
    void actor_head(const Matrix& out, Matrix& mu, Matrix& sigma, Matrix& raw) const;

    int obs_dim_, action_dim_;
    SacConfig cfg_;
    GaussianHead std_head_;
    Mlp actor_, q1_, q2_, q1_target_, q2_target_;
    AdamState actor_adam_, q1_adam_, q2_adam_;
    double log_alpha_ = 0.0;
    std::unique_ptr<AdamVector> alpha_adam_;
};

struct DdpgConfig {
    double lr = 5e-5;
    double gamma = 0.9;
    double tau = 0.005;
    int hidden_layers = 2;
    int hidden_units = 256;
    bool explore_noise = true;
    double noise_start = 1.0;
    double noise_end = 0.1;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

// DDPG with a probabilistic actor: the actor emits (mean, std), exploration
// samples then tanh-squashes, optionally plus annealed additive noise.
// Updates regress Q to r + gamma*Q_target(s', tanh(mu(s'))) and ascend
// Q(s, tanh(mu(s))).
class DdpgAgent : public PolicyAgent {
public:
    DdpgAgent(int obs_dim, int action_dim, DdpgConfig cfg, Rng& rng);

    Vector act(const Vector& s, bool explore, Rng& rng) const override;
    UpdateStats update(const Batch& batch, Rng& rng) override;
    void set_progress(double fraction) override;
    void save(std::ostream& os) const override;
    void load(std::istream& is) override;

    double exploration_noise() const;
    double actor_loss(const Matrix& s, MlpGrads* grads) const;

    Mlp& actor() { return actor_; }
    Mlp& critic() { return q_; }
    const Mlp& critic_target() const { return q_target_; }

private:
    int obs_dim_, action_dim_;
    DdpgConfig cfg_;
    GaussianHead std_head_;
    Mlp actor_, q_, q_target_;
    AdamState actor_adam_, q_adam_;
    double progress_ = 0.0;
};

}  // namespace hotgp
