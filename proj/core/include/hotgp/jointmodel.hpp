#pragma once

#include "hotgp/linalg.hpp"
#include "hotgp/nn.hpp"

#include <iosfwd>
#include <memory>

namespace hotgp {

class Rng;

// Predictive belief over (next-state delta, reward) at one input. The reward
// occupies the last coordinate; units are environment units.
struct JointPrediction {
    Vector mean;
    Matrix cov;

    int reward_index() const { return static_cast<int>(mean.size()) - 1; }
    int state_dim() const { return reward_index(); }
};

// Common surface of the two belief backends. Training rows are
// x = (observation, action) and y = (dynamic-state delta, reward-last).
class JointModel {
public:
    virtual ~JointModel() = default;

    virtual void fit(const Matrix& x, const Matrix& y, Rng& rng) = 0;
    virtual JointPrediction predict(const Vector& x) const = 0;
    virtual bool fitted() const = 0;

    /// Joint Gaussian negative log likelihood of an observed target.
    virtual double nll(const Vector& x, const Vector& y) const = 0;

    virtual void save(std::ostream& os) const = 0;
    virtual void load(std::istream& is) = 0;
};

struct GpConfig {
    int subsample_cap = 500;
    int mean_epochs = 10;
    int mean_batch = 64;
    double mean_lr = 1e-3;
    int kernel_steps = 50;
    double kernel_lr = 0.01;
    double noise_floor = 1e-6;
    bool joint_outputs = true;  // false: diagonal mixing, no state-reward covariance
    bool standardize = true;
    int hidden_layers = 4;
    int hidden_units = 200;
    Activation activation = Activation::SiLU;
};

struct GpHyperparams {
    Vector log_lengthscales;
    double log_signal_var = 0.0;
    Matrix mixing_factor;  // L, lower triangular
    Vector log_mixing_diag;
    double log_noise_var = 0.0;
};

// Exact multi-output GP over a data subsample. The mean is an MLP; the
// covariance is a linear model of coregionalization with one shared
// Matern-5/2 ARD kernel, cov((x,d),(x',e)) = B_de * k(x,x'), B = L L^T +
// diag(exp(log_d)). Train covariance B (x) K + noise*I is solved through the
// eigendecompositions of B and K, so a refit costs O(n^3 + n^2 D) and a
// prediction O(n^2 + n D + D^3). Predictions are of the latent function
// (no observation noise) in environment units.
class GpJointModel : public JointModel {
public:
    GpJointModel(int input_dim, int output_dim, GpConfig cfg);

    void fit(const Matrix& x, const Matrix& y, Rng& rng) override;
    JointPrediction predict(const Vector& x) const override;
    bool fitted() const override { return fitted_; }
    double nll(const Vector& x, const Vector& y) const override;

    void save(std::ostream& os) const override;
    void load(std::istream& is) override;

    // Hyperparameter surface (standardized data space), used by the fit loop
    // itself, diagnostics and the dense-GP oracle checks.
    double log_marginal_likelihood() const;
    Vector lml_gradient() const;
    Vector packed_hyperparameters() const;
    void set_packed_hyperparameters(const Vector& packed);
    GpHyperparams hyperparams() const;
    Matrix mixing_matrix() const;  // B
    double noise_variance() const;

    int sample_count() const { return static_cast<int>(xs_.rows()); }
    const Matrix& train_inputs() const { return xs_; }
    const Matrix& residuals() const { return resid_; }
    const Vector& input_mean() const { return in_mean_; }
    const Vector& input_scale() const { return in_std_; }
    const Vector& output_mean() const { return out_mean_; }
    const Vector& output_scale() const { return out_std_; }

    /// Standardized-space mean function m_theta at a standardized input.
    Vector mean_function(const Vector& x_std) const;

    const GpConfig& config() const { return cfg_; }

private:
    void init_params(Rng& rng);
    void train_mean(const Matrix& xs, const Matrix& ys, Rng& rng);
    void refresh() const;  // rebuild eigen caches from params_ + data
    Vector kernel_cross(const Vector& x_std) const;
    int num_packed() const;

    int input_dim_;
    int output_dim_;
    GpConfig cfg_;

    bool fitted_ = false;
    bool initialized_ = false;

    Vector in_mean_, in_std_, out_mean_, out_std_;
    Mlp mean_net_;
    AdamState mean_adam_;
    std::unique_ptr<AdamVector> kernel_adam_;
    Vector params_;  // [log_ell m] [log_sf2] [L lower rows] [log_d D] [log_sn2]

    Matrix xs_;     // n x m standardized subsample inputs
    Matrix resid_;  // n x D standardized residuals

    // Caches derived from (params_, xs_, resid_); rebuilt by refresh().
    mutable bool cache_ok_ = false;
    mutable Matrix kmat_;    // kernel matrix at current params
    mutable Matrix r2mat_;   // pairwise scaled squared distances
    mutable Matrix v_;       // eigenvectors of K
    mutable Vector s_;       // eigenvalues of K (clamped at 0)
    mutable Matrix u_;       // eigenvectors of B
    mutable Vector lam_;     // eigenvalues of B (clamped at 0)
    mutable Matrix b_;       // mixing matrix
    mutable Matrix alpha_;   // n x D matrix form of C^-1 vec(resid)
    mutable Matrix tmat_;    // V^T resid U
    mutable double lml_ = 0.0;
};

struct EnsembleConfig {
    int members = 7;
    int epochs = 10;
    int batch = 64;
    double lr = 1e-3;
    double logvar_min = -10.0;
    double logvar_max = 0.5;
    bool standardize = true;
    int hidden_layers = 4;
    int hidden_units = 200;
    Activation activation = Activation::SiLU;
};

// Probabilistic ensemble: each member predicts a diagonal Gaussian over the
// targets (mean + soft-clamped log variance) and trains on its own bootstrap
// resample by Gaussian NLL. The bootstrapped prediction has zero cross terms
// between outputs.
class EnsembleJointModel : public JointModel {
public:
    EnsembleJointModel(int input_dim, int output_dim, EnsembleConfig cfg);

    void fit(const Matrix& x, const Matrix& y, Rng& rng) override;

    /// Expectation bootstrap: member-mean of means, total diagonal variance.
    JointPrediction predict(const Vector& x) const override;
    /// Single randomly selected member's diagonal Gaussian.
    JointPrediction predict_member(const Vector& x, Rng& rng) const;

    bool fitted() const override { return fitted_; }
    double nll(const Vector& x, const Vector& y) const override;

    void save(std::ostream& os) const override;
    void load(std::istream& is) override;

    int member_count() const { return static_cast<int>(nets_.size()); }
    const GaussianHead& head() const { return head_; }
    const EnsembleConfig& config() const { return cfg_; }

    // (mean, variance) of one member in standardized space; gradient checks
    // use this alongside nll_gradient.
    std::pair<Vector, Vector> member_output(int member, const Vector& x_std) const;
    Mlp& member_net(int member) { return nets_[static_cast<std::size_t>(member)]; }

private:
    JointPrediction prediction_from(const Vector& mu_std, const Vector& var_std) const;

    int input_dim_;
    int output_dim_;
    EnsembleConfig cfg_;
    GaussianHead head_;

    bool fitted_ = false;
    bool initialized_ = false;
    Vector in_mean_, in_std_, out_mean_, out_std_;
    std::vector<Mlp> nets_;
    std::vector<AdamState> adams_;
};

// Gaussian NLL training loss of one ensemble member on a batch (mean over
// rows), plus its parameter gradients; shared by fit and the gradient suite.
double ensemble_nll_loss(const Mlp& net, const GaussianHead& head, const Matrix& x,
                         const Matrix& y, MlpGrads* grads);

}  // namespace hotgp
