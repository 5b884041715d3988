#pragma once

#include "hotgp/linalg.hpp"

#include <iosfwd>
#include <string_view>
#include <vector>

namespace hotgp {

class Rng;

enum class Activation { SiLU, Mish, ReLU, Tanh, Identity };

Activation activation_from_string(std::string_view name);
const char* activation_name(Activation a);

// Dense feed-forward network. Layer l maps x -> act_l(W_l x + b_l); the
// output layer is typically Identity. Batches are row-major (rows = samples).
struct Mlp {
    std::vector<Matrix> weights;  // out x in
    std::vector<Vector> biases;
    std::vector<Activation> activations;

    static Mlp make(const std::vector<int>& widths, Activation hidden, Rng& rng,
                    Activation output = Activation::Identity);

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    std::size_t num_params() const;

    Vector forward(const Vector& x) const;
    Matrix forward_batch(const Matrix& x) const;
};

struct MlpGrads {
    std::vector<Matrix> dw;
    std::vector<Vector> db;

    static MlpGrads zeros_like(const Mlp& net);
    void scale(double s);
};

// Layer activations retained by forward_cached for the backward pass.
struct MlpCache {
    std::vector<Matrix> pre;   // per layer, before activation
    std::vector<Matrix> post;  // post[0] is the input, post[l+1] layer l output
};

Matrix forward_cached(const Mlp& net, const Matrix& x, MlpCache& cache);

// Accumulates d<upstream, f(x)>/dparams (summed over batch rows) into grads
// and returns the gradient with respect to the input rows.
Matrix backward(const Mlp& net, const MlpCache& cache, const Matrix& upstream,
                MlpGrads& grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<Vector> mb, vb;
    long step = 0;

    static AdamState zeros_like(const Mlp& net);
};

/// Bias-corrected Adam update of all network parameters in place.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, const AdamConfig& cfg);

// Adam over a flat parameter vector (kernel hyperparameters, temperatures).
struct AdamVector {
    Vector m, v;
    long step = 0;

    explicit AdamVector(int n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
    void update(Vector& params, const Vector& grad, const AdamConfig& cfg);
};

double softplus(double x);
double sigmoid(double x);

void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);
void save_adam(std::ostream& os, const AdamState& st);
AdamState load_adam(std::istream& is);

// Soft two-sided clamp for predicted log-variances: smooth, monotone, with
// range (logvar_min, logvar_max + softplus width).
struct GaussianHead {
    double logvar_min = -10.0;
    double logvar_max = 0.5;

    double clamp(double raw) const;
    double clamp_grad(double raw) const;
};

}  // namespace hotgp
