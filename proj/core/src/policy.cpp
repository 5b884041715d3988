#include "hotgp/policy.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"
#include "hotgp/serialize.hpp"

#include <cmath>

namespace hotgp {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kLog2Pi = 1.8378770664093454836;

// log(1 - tanh(z)^2) in a form stable for large |z|.
double log1m_tanh2(double z) {
    return 2.0 * (kLog2 - z - softplus(-2.0 * z));
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
    for (int l = 0; l < target.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        target.weights[lu] = (1.0 - tau) * target.weights[lu] + tau * online.weights[lu];
        target.biases[lu] = (1.0 - tau) * target.biases[lu] + tau * online.biases[lu];
    }
}

std::vector<int> net_widths(int in, int out, int hidden_layers, int hidden_units) {
    std::vector<int> w;
    w.push_back(in);
    for (int l = 0; l < hidden_layers; ++l) w.push_back(hidden_units);
    w.push_back(out);
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// TransitionBuffer

TransitionBuffer::TransitionBuffer(std::int64_t capacity) : capacity_(capacity) {
    if (capacity_ < 0) throw ConfigError("TransitionBuffer: negative capacity");
}

void TransitionBuffer::push(Transition t) {
    if (capacity_ == 0 || size() < capacity_) {
        data_.push_back(std::move(t));
        return;
    }
    data_[static_cast<std::size_t>(cursor_)] = std::move(t);
    cursor_ = (cursor_ + 1) % capacity_;
}

void TransitionBuffer::clear() {
    data_.clear();
    cursor_ = 0;
}

const Transition& TransitionBuffer::sample(Rng& rng) const {
    if (data_.empty()) throw DegenerateDataError("TransitionBuffer::sample: empty");
    return data_[static_cast<std::size_t>(rng.uniform_index(size()))];
}

void TransitionBuffer::save(std::ostream& os) const {
    io::write_i64(os, capacity_);
    io::write_i64(os, cursor_);
    io::write_u64(os, data_.size());
    for (const auto& t : data_) {
        io::write_vector(os, t.s);
        io::write_vector(os, t.a);
        io::write_vector(os, t.s_next);
        io::write_f64(os, t.r);
    }
}

void TransitionBuffer::load(std::istream& is) {
    capacity_ = io::read_i64(is);
    cursor_ = io::read_i64(is);
    const auto n = io::read_u64(is);
    data_.clear();
    data_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Transition t;
        t.s = io::read_vector(is);
        t.a = io::read_vector(is);
        t.s_next = io::read_vector(is);
        t.r = io::read_f64(is);
        data_.push_back(std::move(t));
    }
}

Batch sample_batch(const TransitionBuffer& buffer, int batch_size, Rng& rng) {
    if (buffer.empty()) throw DegenerateDataError("sample_batch: empty buffer");
    const auto p = buffer[0].s.size();
    const auto q = buffer[0].a.size();
    Batch batch;
    batch.s.resize(batch_size, p);
    batch.a.resize(batch_size, q);
    batch.s_next.resize(batch_size, p);
    batch.r.resize(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const Transition& t = buffer.sample(rng);
        batch.s.row(i) = t.s;
        batch.a.row(i) = t.a;
        batch.s_next.row(i) = t.s_next;
        batch.r[i] = t.r;
    }
    return batch;
}

// ---------------------------------------------------------------------------
// SacAgent

SacAgent::SacAgent(int obs_dim, int action_dim, SacConfig cfg, Rng& rng)
    : obs_dim_(obs_dim), action_dim_(action_dim), cfg_(cfg) {
    std_head_.logvar_min = cfg.log_std_min;
    std_head_.logvar_max = cfg.log_std_max;
    actor_ = Mlp::make(net_widths(obs_dim, 2 * action_dim, cfg.hidden_layers, cfg.hidden_units),
                       Activation::SiLU, rng);
    q1_ = Mlp::make(net_widths(obs_dim + action_dim, 1, cfg.hidden_layers, cfg.hidden_units),
                    Activation::SiLU, rng);
    q2_ = Mlp::make(net_widths(obs_dim + action_dim, 1, cfg.hidden_layers, cfg.hidden_units),
                    Activation::SiLU, rng);
    q1_target_ = q1_;
    q2_target_ = q2_;
    actor_adam_ = AdamState::zeros_like(actor_);
    q1_adam_ = AdamState::zeros_like(q1_);
    q2_adam_ = AdamState::zeros_like(q2_);
    alpha_adam_ = std::make_unique<AdamVector>(1);
}

double SacAgent::temperature() const { return std::exp(log_alpha_); }

void SacAgent::actor_head(const Matrix& out, Matrix& mu, Matrix& sigma, Matrix& raw) const {
    mu = out.leftCols(action_dim_);
    raw = out.rightCols(action_dim_);
    sigma = raw.unaryExpr([this](double v) { return std::exp(std_head_.clamp(v)); });
}

Vector SacAgent::act(const Vector& s, bool explore, Rng& rng) const {
    const Vector out = actor_.forward(s);
    Vector a(action_dim_);
    for (int j = 0; j < action_dim_; ++j) {
        double z = out[j];
        if (explore) {
            const double sigma = std::exp(std_head_.clamp(out[action_dim_ + j]));
            z += sigma * rng.normal();
        }
        a[j] = std::tanh(z);
    }
    return a;
}

double SacAgent::log_prob(const Vector& s, const Vector& z) const {
    const Vector out = actor_.forward(s);
    double logp = 0.0;
    for (int j = 0; j < action_dim_; ++j) {
        const double mu = out[j];
        const double sigma = std::exp(std_head_.clamp(out[action_dim_ + j]));
        const double eps = (z[j] - mu) / sigma;
        logp += -0.5 * eps * eps - std::log(sigma) - 0.5 * kLog2Pi - log1m_tanh2(z[j]);
    }
    return logp;
}

double SacAgent::actor_loss(const Matrix& s, const Matrix& noise, MlpGrads* grads,
                            Vector* logp_out) const {
    const int b = static_cast<int>(s.rows());
    const double alpha = temperature();

    MlpCache actor_cache;
    const Matrix out = forward_cached(actor_, s, actor_cache);
    Matrix mu, sigma, raw;
    actor_head(out, mu, sigma, raw);
    const Matrix z = mu + sigma.cwiseProduct(noise);
    const Matrix a = z.array().tanh().matrix();

    Vector logp(b);
    for (int i = 0; i < b; ++i) {
        double acc = 0.0;
        for (int j = 0; j < action_dim_; ++j) {
            acc += -0.5 * noise(i, j) * noise(i, j) - std::log(sigma(i, j)) -
                   0.5 * kLog2Pi - log1m_tanh2(z(i, j));
        }
        logp[i] = acc;
    }

    // Q_min(s, a) and its gradient with respect to the action input.
    const Matrix xq = concat_cols(s, a);
    MlpCache c1, c2;
    const Matrix v1 = forward_cached(q1_, xq, c1);
    const Matrix v2 = forward_cached(q2_, xq, c2);
    Matrix pick1 = Matrix::Zero(b, 1), pick2 = Matrix::Zero(b, 1);
    Vector qmin(b);
    for (int i = 0; i < b; ++i) {
        if (v1(i, 0) <= v2(i, 0)) {
            qmin[i] = v1(i, 0);
            pick1(i, 0) = 1.0;
        } else {
            qmin[i] = v2(i, 0);
            pick2(i, 0) = 1.0;
        }
    }

    const double loss = (alpha * logp.array() - qmin.array()).mean();
    if (logp_out != nullptr) *logp_out = logp;
    if (grads == nullptr) return loss;

    MlpGrads junk1 = MlpGrads::zeros_like(q1_);
    MlpGrads junk2 = MlpGrads::zeros_like(q2_);
    const Matrix gin1 = backward(q1_, c1, pick1, junk1);
    const Matrix gin2 = backward(q2_, c2, pick2, junk2);
    const Matrix dq_da = gin1.rightCols(action_dim_) + gin2.rightCols(action_dim_);

    // Chain to the actor outputs; sigma = exp(clamp(raw)).
    Matrix upstream(b, 2 * action_dim_);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < action_dim_; ++j) {
            const double aj = a(i, j);
            const double one_m_a2 = 1.0 - aj * aj;
            const double dmu = alpha * 2.0 * aj - dq_da(i, j) * one_m_a2;
            const double dsigma = alpha * (-1.0 / sigma(i, j) + 2.0 * aj * noise(i, j)) -
                                  dq_da(i, j) * one_m_a2 * noise(i, j);
            upstream(i, j) = dmu * inv_b;
            upstream(i, action_dim_ + j) =
                dsigma * sigma(i, j) * std_head_.clamp_grad(raw(i, j)) * inv_b;
        }
    }
    backward(actor_, actor_cache, upstream, *grads);
    return loss;
}

UpdateStats SacAgent::update(const Batch& batch, Rng& rng) {
    const int b = batch.size();
    const double alpha = temperature();

    // Bellman targets from the target critics and a fresh next-action sample.
    const Matrix out_next = actor_.forward_batch(batch.s_next);
    Matrix mu_n, sigma_n, raw_n;
    actor_head(out_next, mu_n, sigma_n, raw_n);
    Matrix noise_n(b, action_dim_);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < action_dim_; ++j) noise_n(i, j) = rng.normal();
    }
    const Matrix z_n = mu_n + sigma_n.cwiseProduct(noise_n);
    const Matrix a_n = z_n.array().tanh().matrix();
    const Matrix xq_n = concat_cols(batch.s_next, a_n);
    const Matrix q1_n = q1_target_.forward_batch(xq_n);
    const Matrix q2_n = q2_target_.forward_batch(xq_n);

    Vector y(b);
    for (int i = 0; i < b; ++i) {
        double logp = 0.0;
        for (int j = 0; j < action_dim_; ++j) {
            logp += -0.5 * noise_n(i, j) * noise_n(i, j) - std::log(sigma_n(i, j)) -
                    0.5 * kLog2Pi - log1m_tanh2(z_n(i, j));
        }
        const double qt = std::min(q1_n(i, 0), q2_n(i, 0)) - alpha * logp;
        y[i] = batch.r[i] + cfg_.gamma * qt;
    }

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg_.lr;
    const Matrix xq = concat_cols(batch.s, batch.a);
    double critic_loss = 0.0;
    const auto critic_step = [&](Mlp& q, AdamState& adam) {
        MlpCache cache;
        const Matrix pred = forward_cached(q, xq, cache);
        const Matrix err = pred.col(0) - y;
        critic_loss += err.squaredNorm() / static_cast<double>(b);
        const Matrix upstream = 2.0 * err / static_cast<double>(b);
        MlpGrads grads = MlpGrads::zeros_like(q);
        backward(q, cache, upstream, grads);
        adam_step(q, grads, adam, adam_cfg);
    };
    critic_step(q1_, q1_adam_);
    critic_step(q2_, q2_adam_);

    Matrix noise(b, action_dim_);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < action_dim_; ++j) noise(i, j) = rng.normal();
    }
    MlpGrads actor_grads = MlpGrads::zeros_like(actor_);
    Vector logp;
    const double a_loss = actor_loss(batch.s, noise, &actor_grads, &logp);
    adam_step(actor_, actor_grads, actor_adam_, adam_cfg);

    // Temperature toward target entropy.
    const double alpha_grad = -temperature() * (logp.mean() + target_entropy());
    Vector la(1);
    la[0] = log_alpha_;
    Vector ga(1);
    ga[0] = alpha_grad;
    alpha_adam_->update(la, ga, adam_cfg);
    log_alpha_ = la[0];

    polyak_update(q1_target_, q1_, cfg_.tau);
    polyak_update(q2_target_, q2_, cfg_.tau);

    return {critic_loss / 2.0, a_loss, temperature()};
}

void SacAgent::save(std::ostream& os) const {
    save_mlp(os, actor_);
    save_mlp(os, q1_);
    save_mlp(os, q2_);
    save_mlp(os, q1_target_);
    save_mlp(os, q2_target_);
    save_adam(os, actor_adam_);
    save_adam(os, q1_adam_);
    save_adam(os, q2_adam_);
    io::write_f64(os, log_alpha_);
    io::write_i64(os, alpha_adam_->step);
    io::write_vector(os, alpha_adam_->m);
    io::write_vector(os, alpha_adam_->v);
}

void SacAgent::load(std::istream& is) {
    actor_ = load_mlp(is);
    q1_ = load_mlp(is);
    q2_ = load_mlp(is);
    q1_target_ = load_mlp(is);
    q2_target_ = load_mlp(is);
    actor_adam_ = load_adam(is);
    q1_adam_ = load_adam(is);
    q2_adam_ = load_adam(is);
    log_alpha_ = io::read_f64(is);
    alpha_adam_ = std::make_unique<AdamVector>(1);
    alpha_adam_->step = io::read_i64(is);
    alpha_adam_->m = io::read_vector(is);
    alpha_adam_->v = io::read_vector(is);
}

// ---------------------------------------------------------------------------
// DdpgAgent

DdpgAgent::DdpgAgent(int obs_dim, int action_dim, DdpgConfig cfg, Rng& rng)
    : obs_dim_(obs_dim), action_dim_(action_dim), cfg_(cfg) {
    std_head_.logvar_min = cfg.log_std_min;
    std_head_.logvar_max = cfg.log_std_max;
    actor_ = Mlp::make(net_widths(obs_dim, 2 * action_dim, cfg.hidden_layers, cfg.hidden_units),
                       Activation::SiLU, rng);
    q_ = Mlp::make(net_widths(obs_dim + action_dim, 1, cfg.hidden_layers, cfg.hidden_units),
                   Activation::SiLU, rng);
    q_target_ = q_;
    actor_adam_ = AdamState::zeros_like(actor_);
    q_adam_ = AdamState::zeros_like(q_);
}

double DdpgAgent::exploration_noise() const {
    return cfg_.noise_start + (cfg_.noise_end - cfg_.noise_start) * progress_;
}

void DdpgAgent::set_progress(double fraction) {
    progress_ = std::min(std::max(fraction, 0.0), 1.0);
}

Vector DdpgAgent::act(const Vector& s, bool explore, Rng& rng) const {
    const Vector out = actor_.forward(s);
    Vector a(action_dim_);
    for (int j = 0; j < action_dim_; ++j) {
        double z = out[j];
        if (explore) {
            const double sigma = std::exp(std_head_.clamp(out[action_dim_ + j]));
            z += sigma * rng.normal();
        }
        a[j] = std::tanh(z);
        if (explore && cfg_.explore_noise) {
            a[j] += rng.normal() * exploration_noise();
            a[j] = std::min(std::max(a[j], -1.0), 1.0);
        }
    }
    return a;
}

double DdpgAgent::actor_loss(const Matrix& s, MlpGrads* grads) const {
    const int b = static_cast<int>(s.rows());
    MlpCache actor_cache;
    const Matrix out = forward_cached(actor_, s, actor_cache);
    const Matrix mu = out.leftCols(action_dim_);
    const Matrix a = mu.array().tanh().matrix();

    const Matrix xq = concat_cols(s, a);
    MlpCache qc;
    const Matrix qv = forward_cached(q_, xq, qc);
    const double loss = -qv.col(0).mean();
    if (grads == nullptr) return loss;

    MlpGrads junk = MlpGrads::zeros_like(q_);
    const Matrix ones = Matrix::Constant(b, 1, -1.0 / static_cast<double>(b));
    const Matrix gin = backward(q_, qc, ones, junk);
    const Matrix dq_da = gin.rightCols(action_dim_);

    Matrix upstream = Matrix::Zero(b, 2 * action_dim_);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < action_dim_; ++j) {
            const double aj = a(i, j);
            upstream(i, j) = dq_da(i, j) * (1.0 - aj * aj);
        }
    }
    backward(actor_, actor_cache, upstream, *grads);
    return loss;
}

UpdateStats DdpgAgent::update(const Batch& batch, Rng& /*rng*/) {
    const int b = batch.size();

    const Matrix out_next = actor_.forward_batch(batch.s_next);
    const Matrix a_next = out_next.leftCols(action_dim_).array().tanh().matrix();
    const Matrix qt = q_target_.forward_batch(concat_cols(batch.s_next, a_next));
    Vector y(b);
    for (int i = 0; i < b; ++i) y[i] = batch.r[i] + cfg_.gamma * qt(i, 0);

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg_.lr;
    MlpCache cache;
    const Matrix pred = forward_cached(q_, concat_cols(batch.s, batch.a), cache);
    const Matrix err = pred.col(0) - y;
    const double critic_loss = err.squaredNorm() / static_cast<double>(b);
    const Matrix upstream = 2.0 * err / static_cast<double>(b);
    MlpGrads q_grads = MlpGrads::zeros_like(q_);
    backward(q_, cache, upstream, q_grads);
    adam_step(q_, q_grads, q_adam_, adam_cfg);

    MlpGrads actor_grads = MlpGrads::zeros_like(actor_);
    const double a_loss = actor_loss(batch.s, &actor_grads);
    adam_step(actor_, actor_grads, actor_adam_, adam_cfg);

    polyak_update(q_target_, q_, cfg_.tau);
    return {critic_loss, a_loss, exploration_noise()};
}

void DdpgAgent::save(std::ostream& os) const {
    save_mlp(os, actor_);
    save_mlp(os, q_);
    save_mlp(os, q_target_);
    save_adam(os, actor_adam_);
    save_adam(os, q_adam_);
    io::write_f64(os, progress_);
}

void DdpgAgent::load(std::istream& is) {
    actor_ = load_mlp(is);
    q_ = load_mlp(is);
    q_target_ = load_mlp(is);
    actor_adam_ = load_adam(is);
    q_adam_ = load_adam(is);
    progress_ = io::read_f64(is);
}

}  // namespace hotgp
