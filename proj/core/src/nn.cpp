#include "hotgp/nn.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"
#include "hotgp/serialize.hpp"

#include <cmath>

namespace hotgp {

Activation activation_from_string(std::string_view name) {
    if (name == "silu") return Activation::SiLU;
    if (name == "mish") return Activation::Mish;
    if (name == "relu") return Activation::ReLU;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: " + std::string(name));
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::SiLU: return "silu";
        case Activation::Mish: return "mish";
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "?";
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

double act_value(Activation a, double x) {
    switch (a) {
        case Activation::SiLU: return x * sigmoid(x);
        case Activation::Mish: return x * std::tanh(softplus(x));
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: return x;
    }
    return x;
}

double act_grad(Activation a, double x) {
    switch (a) {
        case Activation::SiLU: {
            const double s = sigmoid(x);
            return s * (1.0 + x * (1.0 - s));
        }
        case Activation::Mish: {
            const double t = std::tanh(softplus(x));
            return t + x * (1.0 - t * t) * sigmoid(x);
        }
        case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

Matrix apply_act(Activation a, const Matrix& x) {
    if (a == Activation::Identity) return x;
    return x.unaryExpr([a](double v) { return act_value(a, v); });
}

Matrix apply_act_grad(Activation a, const Matrix& x) {
    if (a == Activation::Identity) return Matrix::Ones(x.rows(), x.cols());
    return x.unaryExpr([a](double v) { return act_grad(a, v); });
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& widths, Activation hidden, Rng& rng,
              Activation output) {
    if (widths.size() < 2) throw ShapeError("Mlp::make: need at least input and output widths");
    Mlp net;
    const int layers = static_cast<int>(widths.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        const int fan_in = widths[static_cast<std::size_t>(l)];
        const int fan_out = widths[static_cast<std::size_t>(l) + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(fan_out));
        net.activations.push_back(l + 1 < layers ? hidden : output);
    }
    return net;
}

std::size_t Mlp::num_params() const {
    std::size_t n = 0;
    for (int l = 0; l < num_layers(); ++l) {
        n += static_cast<std::size_t>(weights[static_cast<std::size_t>(l)].size());
        n += static_cast<std::size_t>(biases[static_cast<std::size_t>(l)].size());
    }
    return n;
}

Vector Mlp::forward(const Vector& x) const {
    return forward_batch(x.transpose()).row(0);
}

Matrix Mlp::forward_batch(const Matrix& x) const {
    if (x.cols() != input_dim()) throw ShapeError("Mlp::forward: input width mismatch");
    Matrix h = x;
    for (int l = 0; l < num_layers(); ++l) {
        const auto& w = weights[static_cast<std::size_t>(l)];
        const auto& b = biases[static_cast<std::size_t>(l)];
        Matrix pre = (h * w.transpose()).rowwise() + b.transpose();
        h = apply_act(activations[static_cast<std::size_t>(l)], pre);
    }
    return h;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto& w = net.weights[static_cast<std::size_t>(l)];
        g.dw.push_back(Matrix::Zero(w.rows(), w.cols()));
        g.db.push_back(Vector::Zero(w.rows()));
    }
    return g;
}

void MlpGrads::scale(double s) {
    for (auto& m : dw) m *= s;
    for (auto& v : db) v *= s;
}

Matrix forward_cached(const Mlp& net, const Matrix& x, MlpCache& cache) {
    if (x.cols() != net.input_dim()) throw ShapeError("forward_cached: input width mismatch");
    cache.pre.clear();
    cache.post.clear();
    cache.post.push_back(x);
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto& w = net.weights[static_cast<std::size_t>(l)];
        const auto& b = net.biases[static_cast<std::size_t>(l)];
        Matrix pre = (cache.post.back() * w.transpose()).rowwise() + b.transpose();
        cache.post.push_back(apply_act(net.activations[static_cast<std::size_t>(l)], pre));
        cache.pre.push_back(std::move(pre));
    }
    return cache.post.back();
}

Matrix backward(const Mlp& net, const MlpCache& cache, const Matrix& upstream,
                MlpGrads& grads) {
    if (upstream.cols() != net.output_dim() ||
        upstream.rows() != cache.post.front().rows()) {
        throw ShapeError("backward: upstream gradient shape mismatch");
    }
    Matrix g = upstream;
    for (int l = net.num_layers() - 1; l >= 0; --l) {
        const auto lu = static_cast<std::size_t>(l);
        const Matrix dpre =
            g.cwiseProduct(apply_act_grad(net.activations[lu], cache.pre[lu]));
        grads.dw[lu].noalias() += dpre.transpose() * cache.post[lu];
        grads.db[lu] += dpre.colwise().sum().transpose();
        g = dpre * net.weights[lu];
    }
    return g;
}

AdamState AdamState::zeros_like(const Mlp& net) {
    AdamState st;
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto& w = net.weights[static_cast<std::size_t>(l)];
        st.mw.push_back(Matrix::Zero(w.rows(), w.cols()));
        st.vw.push_back(Matrix::Zero(w.rows(), w.cols()));
        st.mb.push_back(Vector::Zero(w.rows()));
        st.vb.push_back(Vector::Zero(w.rows()));
    }
    return st;
}

namespace {

template <typename T>
void adam_update_block(T& param, const T& grad, T& m, T& v, double corr1, double corr2,
                       const AdamConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    param.array() -=
        cfg.lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + cfg.eps);
}

}  // namespace

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, const AdamConfig& cfg) {
    state.step += 1;
    const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        adam_update_block(net.weights[lu], grads.dw[lu], state.mw[lu], state.vw[lu], corr1,
                          corr2, cfg);
        adam_update_block(net.biases[lu], grads.db[lu], state.mb[lu], state.vb[lu], corr1,
                          corr2, cfg);
    }
}

void AdamVector::update(Vector& params, const Vector& grad, const AdamConfig& cfg) {
    step += 1;
    const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    params.array() -= cfg.lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + cfg.eps);
}

void save_mlp(std::ostream& os, const Mlp& net) {
    io::write_u64(os, static_cast<std::uint64_t>(net.num_layers()));
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        io::write_matrix(os, net.weights[lu]);
        io::write_vector(os, net.biases[lu]);
        io::write_string(os, activation_name(net.activations[lu]));
    }
}

Mlp load_mlp(std::istream& is) {
    Mlp net;
    const auto layers = io::read_u64(is);
    for (std::uint64_t l = 0; l < layers; ++l) {
        net.weights.push_back(io::read_matrix(is));
        net.biases.push_back(io::read_vector(is));
        net.activations.push_back(activation_from_string(io::read_string(is)));
    }
    return net;
}

void save_adam(std::ostream& os, const AdamState& st) {
    io::write_i64(os, st.step);
    io::write_u64(os, st.mw.size());
    for (std::size_t l = 0; l < st.mw.size(); ++l) {
        io::write_matrix(os, st.mw[l]);
        io::write_matrix(os, st.vw[l]);
        io::write_vector(os, st.mb[l]);
        io::write_vector(os, st.vb[l]);
    }
}

AdamState load_adam(std::istream& is) {
    AdamState st;
    st.step = io::read_i64(is);
    const auto layers = io::read_u64(is);
    for (std::uint64_t l = 0; l < layers; ++l) {
        st.mw.push_back(io::read_matrix(is));
        st.vw.push_back(io::read_matrix(is));
        st.mb.push_back(io::read_vector(is));
        st.vb.push_back(io::read_vector(is));
    }
    return st;
}

double GaussianHead::clamp(double raw) const {
    const double upper = logvar_max - softplus(logvar_max - raw);
    const double soft = logvar_min + softplus(upper - logvar_min);
    return std::min(soft, logvar_max);
}

double GaussianHead::clamp_grad(double raw) const {
    const double upper = logvar_max - softplus(logvar_max - raw);
    const double soft = logvar_min + softplus(upper - logvar_min);
    if (soft > logvar_max) return 0.0;
    return sigmoid(logvar_max - raw) * sigmoid(upper - logvar_min);
}

}  // namespace hotgp
