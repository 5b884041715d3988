#include "hotgp/jointmodel.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"
#include "hotgp/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hotgp {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLog2Pi = 1.8378770664093454836;

// Columnwise mean and standard deviation with a floor so constant columns
// standardize to zero instead of blowing up.
void column_stats(const Matrix& m, Vector& mean, Vector& stddev) {
    const double n = static_cast<double>(m.rows());
    mean = m.colwise().mean();
    Matrix centered = m.rowwise() - mean.transpose();
    stddev = (centered.array().square().colwise().sum() / n).sqrt();
    for (Eigen::Index j = 0; j < stddev.size(); ++j) {
        if (stddev[j] < 1e-8) stddev[j] = 1.0;
    }
}

Matrix matern52(const Matrix& r2, double sf2) {
    Matrix r = r2.cwiseMax(0.0).cwiseSqrt();
    return sf2 * ((1.0 + kSqrt5 * r.array() + (5.0 / 3.0) * r2.array().max(0.0)) *
                  (-kSqrt5 * r.array()).exp())
                     .matrix();
}

// Pairwise scaled squared distances between rows of a and rows of b.
Matrix scaled_sqdist(const Matrix& a, const Matrix& b, const Vector& inv_ell) {
    Matrix as = a * inv_ell.asDiagonal();
    Matrix bs = b * inv_ell.asDiagonal();
    Vector an = as.rowwise().squaredNorm();
    Vector bn = bs.rowwise().squaredNorm();
    Matrix r2 = -2.0 * as * bs.transpose();
    r2.colwise() += an;
    r2.rowwise() += bn.transpose();
    return r2.cwiseMax(0.0);
}

}  // namespace

GpJointModel::GpJointModel(int input_dim, int output_dim, GpConfig cfg)
    : input_dim_(input_dim), output_dim_(output_dim), cfg_(cfg) {
    if (input_dim < 1 || output_dim < 1) throw ShapeError("GpJointModel: bad dimensions");
}

int GpJointModel::num_packed() const {
    const int d = output_dim_;
    return input_dim_ + 1 + d * (d + 1) / 2 + d + 1;
}

void GpJointModel::init_params(Rng& rng) {
    std::vector<int> widths;
    widths.push_back(input_dim_);
    for (int l = 0; l < cfg_.hidden_layers; ++l) widths.push_back(cfg_.hidden_units);
    widths.push_back(output_dim_);
    mean_net_ = Mlp::make(widths, cfg_.activation, rng);
    mean_adam_ = AdamState::zeros_like(mean_net_);

    params_ = Vector::Zero(num_packed());
    int at = input_dim_;  // log lengthscales start at zero
    params_[at++] = 0.0;  // log signal variance
    for (int a = 0; a < output_dim_; ++a) {
        for (int b = 0; b <= a; ++b) params_[at++] = (a == b) ? 0.7 : 0.0;
    }
    for (int a = 0; a < output_dim_; ++a) params_[at++] = std::log(0.5);
    params_[at++] = std::log(0.1);  // log noise variance
    kernel_adam_ = std::make_unique<AdamVector>(num_packed());
    initialized_ = true;
}

GpHyperparams GpJointModel::hyperparams() const {
    GpHyperparams h;
    h.log_lengthscales = params_.head(input_dim_);
    int at = input_dim_;
    h.log_signal_var = params_[at++];
    h.mixing_factor = Matrix::Zero(output_dim_, output_dim_);
    for (int a = 0; a < output_dim_; ++a) {
        for (int b = 0; b <= a; ++b) h.mixing_factor(a, b) = params_[at++];
    }
    h.log_mixing_diag = params_.segment(at, output_dim_);
    at += output_dim_;
    h.log_noise_var = params_[at];
    return h;
}

Matrix GpJointModel::mixing_matrix() const {
    const GpHyperparams h = hyperparams();
    Matrix b = h.mixing_factor * h.mixing_factor.transpose();
    b.diagonal() += h.log_mixing_diag.array().exp().matrix();
    return b;
}

double GpJointModel::noise_variance() const {
    return std::exp(params_[num_packed() - 1]);
}

Vector GpJointModel::packed_hyperparameters() const { return params_; }

void GpJointModel::set_packed_hyperparameters(const Vector& packed) {
    if (packed.size() != num_packed()) {
        throw ShapeError("set_packed_hyperparameters: size mismatch");
    }
    params_ = packed;
    cache_ok_ = false;
    if (fitted_) refresh();
}

Vector GpJointModel::mean_function(const Vector& x_std) const {
    return mean_net_.forward(x_std);
}

void GpJointModel::refresh() const {
    const GpHyperparams h = hyperparams();
    const Vector inv_ell = (-h.log_lengthscales.array()).exp();
    const double sf2 = std::exp(h.log_signal_var);
    const double sn2 = std::exp(h.log_noise_var);
    const int n = static_cast<int>(xs_.rows());
    const int d = output_dim_;

    b_ = h.mixing_factor * h.mixing_factor.transpose();
    b_.diagonal() += h.log_mixing_diag.array().exp().matrix();

    r2mat_ = scaled_sqdist(xs_, xs_, inv_ell);
    kmat_ = matern52(r2mat_, sf2);

    Eigen::SelfAdjointEigenSolver<Matrix> eig_k(kmat_);
    v_ = eig_k.eigenvectors();
    s_ = eig_k.eigenvalues().cwiseMax(0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig_b(b_);
    u_ = eig_b.eigenvectors();
    lam_ = eig_b.eigenvalues().cwiseMax(0.0);

    tmat_ = v_.transpose() * resid_ * u_;
    Matrix th(n, d);
    double quad = 0.0;
    double logdet = 0.0;
    for (int e = 0; e < d; ++e) {
        for (int i = 0; i < n; ++i) {
            const double denom = lam_[e] * s_[i] + sn2;
            th(i, e) = tmat_(i, e) / denom;
            quad += tmat_(i, e) * th(i, e);
            logdet += std::log(denom);
        }
    }
    alpha_ = v_ * th * u_.transpose();
    lml_ = -0.5 * (quad + logdet + static_cast<double>(n) * d * kLog2Pi);
    cache_ok_ = true;
}

double GpJointModel::log_marginal_likelihood() const {
    if (!fitted_) throw NotFittedError("log_marginal_likelihood: model not fitted");
    if (!cache_ok_) refresh();
    return lml_;
}

Vector GpJointModel::lml_gradient() const {
    if (!fitted_) throw NotFittedError("lml_gradient: model not fitted");
    if (!cache_ok_) refresh();

    const GpHyperparams h = hyperparams();
    const Vector ell = h.log_lengthscales.array().exp();
    const double sf2 = std::exp(h.log_signal_var);
    const double sn2 = std::exp(h.log_noise_var);
    const int n = static_cast<int>(xs_.rows());
    const int d = output_dim_;

    // Shared trace structure: dlml/dpsi = <dC/dpsi, M> with
    // M = 0.5 * (alpha alpha^T - C^-1) folded to the kernel/mixing blocks.
    Vector hvec(n), qvec(d), inv_sum_per_out(d);
    double inv_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int e = 0; e < d; ++e) acc += lam_[e] / (lam_[e] * s_[i] + sn2);
        hvec[i] = acc;
    }
    for (int e = 0; e < d; ++e) {
        double acc = 0.0, accinv = 0.0;
        for (int i = 0; i < n; ++i) {
            const double denom = lam_[e] * s_[i] + sn2;
            acc += s_[i] / denom;
            accinv += 1.0 / denom;
        }
        qvec[e] = acc;
        inv_sum_per_out[e] = accinv;
        inv_sum += accinv;
    }

    const Matrix wn = v_ * hvec.asDiagonal() * v_.transpose();
    const Matrix gmat = alpha_ * b_ * alpha_.transpose();
    const Matrix mker = 0.5 * (gmat - wn);  // n x n

    const Matrix atil = alpha_.transpose() * (kmat_ * alpha_);
    const Matrix wb = u_ * qvec.asDiagonal() * u_.transpose();
    const Matrix mmix = 0.5 * (atil - wb);  // D x D

    Vector grad = Vector::Zero(num_packed());

    // d k / d r^2 factor for Matern-5/2, times -2 d_j^2 / ell_j^2 per input dim.
    Matrix rmat = r2mat_.cwiseSqrt();
    Matrix e1 = (5.0 / 3.0) * sf2 *
                ((1.0 + kSqrt5 * rmat.array()) * (-kSqrt5 * rmat.array()).exp()).matrix();
    Matrix f = e1.cwiseProduct(mker);
    const Vector f_rowsum = f.rowwise().sum();
    for (int j = 0; j < input_dim_; ++j) {
        const Vector c = xs_.col(j);
        const Vector c2 = c.cwiseProduct(c);
        const double term = 2.0 * c2.dot(f_rowsum) - 2.0 * c.dot(f * c);
        grad[j] = term / (ell[j] * ell[j]);
    }
    grad[input_dim_] = kmat_.cwiseProduct(mker).sum();  // log signal variance

    int at = input_dim_ + 1;
    const Matrix ml = mmix * h.mixing_factor;
    for (int a = 0; a < output_dim_; ++a) {
        for (int b = 0; b <= a; ++b) {
            const bool off_diag = (a != b);
            grad[at++] = (off_diag && !cfg_.joint_outputs) ? 0.0 : 2.0 * ml(a, b);
        }
    }
    const Vector dvec = h.log_mixing_diag.array().exp();
    for (int a = 0; a < output_dim_; ++a) grad[at++] = dvec[a] * mmix(a, a);
    grad[at] = 0.5 * sn2 * (alpha_.squaredNorm() - inv_sum);
    return grad;
}

void GpJointModel::train_mean(const Matrix& xs, const Matrix& ys, Rng& rng) {
    const int n = static_cast<int>(xs.rows());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg_.mean_lr;

    for (int epoch = 0; epoch < cfg_.mean_epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_index(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }
        for (int start = 0; start < n; start += cfg_.mean_batch) {
            const int bsz = std::min(cfg_.mean_batch, n - start);
            Matrix xb(bsz, xs.cols()), yb(bsz, ys.cols());
            for (int r = 0; r < bsz; ++r) {
                xb.row(r) = xs.row(order[static_cast<std::size_t>(start + r)]);
                yb.row(r) = ys.row(order[static_cast<std::size_t>(start + r)]);
            }
            MlpCache cache;
            const Matrix pred = forward_cached(mean_net_, xb, cache);
            const Matrix upstream = 2.0 * (pred - yb) / static_cast<double>(bsz);
            MlpGrads grads = MlpGrads::zeros_like(mean_net_);
            backward(mean_net_, cache, upstream, grads);
            adam_step(mean_net_, grads, mean_adam_, adam_cfg);
        }
    }
}

void GpJointModel::fit(const Matrix& x, const Matrix& y, Rng& rng) {
    if (x.rows() != y.rows()) throw ShapeError("GpJointModel::fit: row mismatch");
    if (x.cols() != input_dim_ || y.cols() != output_dim_) {
        throw ShapeError("GpJointModel::fit: column mismatch");
    }
    if (x.rows() < 2) throw DegenerateDataError("GpJointModel::fit: need at least 2 rows");
    require_finite(x, "GpJointModel::fit inputs");
    require_finite(y, "GpJointModel::fit targets");

    const int n_total = static_cast<int>(x.rows());
    if (cfg_.standardize) {
        column_stats(x, in_mean_, in_std_);
        column_stats(y, out_mean_, out_std_);
    } else {
        in_mean_ = Vector::Zero(input_dim_);
        in_std_ = Vector::Ones(input_dim_);
        out_mean_ = Vector::Zero(output_dim_);
        out_std_ = Vector::Ones(output_dim_);
    }

    // Subset-of-data: train on a random subsample, statistics from the whole buffer.
    const int n = std::min(cfg_.subsample_cap, n_total);
    std::vector<int> idx(static_cast<std::size_t>(n_total));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n; ++i) {
        const auto j =
            static_cast<std::size_t>(i + rng.uniform_index(n_total - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }

    xs_.resize(n, input_dim_);
    Matrix ys(n, output_dim_);
    for (int i = 0; i < n; ++i) {
        xs_.row(i) = (x.row(idx[static_cast<std::size_t>(i)]) - in_mean_.transpose())
                         .cwiseQuotient(in_std_.transpose());
        ys.row(i) = (y.row(idx[static_cast<std::size_t>(i)]) - out_mean_.transpose())
                        .cwiseQuotient(out_std_.transpose());
    }

    if (!initialized_) init_params(rng);
    train_mean(xs_, ys, rng);
    resid_ = ys - mean_net_.forward_batch(xs_);
    fitted_ = true;
    cache_ok_ = false;

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg_.kernel_lr;
    const double log_floor = std::log(cfg_.noise_floor);
    for (int step = 0; step < cfg_.kernel_steps; ++step) {
        if (!cache_ok_) refresh();
        const Vector grad = lml_gradient();
        const Vector neg = -grad;
        kernel_adam_->update(params_, neg, adam_cfg);
        // Keep hyperparameters in sane ranges; the noise floor is a hard clamp.
        params_.head(input_dim_) = params_.head(input_dim_).cwiseMax(-6.0).cwiseMin(9.0);
        params_[input_dim_] = std::clamp(params_[input_dim_], -9.0, 9.0);
        const int dstart = input_dim_ + 1 + output_dim_ * (output_dim_ + 1) / 2;
        for (int a = 0; a < output_dim_; ++a) {
            params_[dstart + a] = std::clamp(params_[dstart + a], -18.0, 9.0);
        }
        params_[num_packed() - 1] = std::clamp(params_[num_packed() - 1], log_floor, 9.0);
        cache_ok_ = false;
    }
    refresh();
}

Vector GpJointModel::kernel_cross(const Vector& x_std) const {
    const GpHyperparams h = hyperparams();
    const Vector inv_ell = (-h.log_lengthscales.array()).exp();
    const double sf2 = std::exp(h.log_signal_var);
    Matrix diff = xs_ * inv_ell.asDiagonal();
    diff.rowwise() -= (x_std.cwiseProduct(inv_ell)).transpose();
    Vector r2 = diff.rowwise().squaredNorm();
    Vector r = r2.cwiseSqrt();
    return sf2 * ((1.0 + kSqrt5 * r.array() + (5.0 / 3.0) * r2.array()) *
                  (-kSqrt5 * r.array()).exp())
                     .matrix();
}

JointPrediction GpJointModel::predict(const Vector& x) const {
    if (!fitted_) throw NotFittedError("GpJointModel::predict: model not fitted");
    if (!cache_ok_) refresh();
    if (x.size() != input_dim_) throw ShapeError("GpJointModel::predict: input size");

    const Vector x_std = (x - in_mean_).cwiseQuotient(in_std_);
    const Vector m0 = mean_net_.forward(x_std);
    const Vector kstar = kernel_cross(x_std);
    const double sf2 = std::exp(params_[input_dim_]);
    const double sn2 = noise_variance();
    const int d = output_dim_;

    const Vector mu_std = m0 + b_ * (alpha_.transpose() * kstar);

    const Vector t = v_.transpose() * kstar;
    Vector g(d);
    for (int e = 0; e < d; ++e) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            acc += t[i] * t[i] / (lam_[e] * s_[i] + sn2);
        }
        g[e] = acc;
    }
    Matrix q = u_ * (lam_.array().square() * g.array()).matrix().asDiagonal() *
               u_.transpose();
    Matrix cov_std = sf2 * b_ - q;
    cov_std = 0.5 * (cov_std + cov_std.transpose()).eval();
    for (int e = 0; e < d; ++e) cov_std(e, e) = std::max(cov_std(e, e), 0.0);

    JointPrediction pred;
    pred.mean = mu_std.cwiseProduct(out_std_) + out_mean_;
    pred.cov = (out_std_ * out_std_.transpose()).cwiseProduct(cov_std);
    return pred;
}

double GpJointModel::nll(const Vector& x, const Vector& y) const {
    const JointPrediction pred = predict(x);
    const int d = output_dim_;
    Matrix cov = pred.cov;
    // Observation-level likelihood: latent prediction plus fitted noise.
    cov.diagonal() += noise_variance() * out_std_.cwiseProduct(out_std_);
    const Matrix l = cholesky(cov, default_jitter(cov));
    const Vector z = l.triangularView<Eigen::Lower>().solve(y - pred.mean);
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += std::log(l(i, i));
    return 0.5 * (z.squaredNorm() + static_cast<double>(d) * kLog2Pi) + logdet;
}

void GpJointModel::save(std::ostream& os) const {
    io::write_u64(os, initialized_ ? 1 : 0);
    io::write_u64(os, fitted_ ? 1 : 0);
    if (!initialized_) return;
    io::write_vector(os, in_mean_);
    io::write_vector(os, in_std_);
    io::write_vector(os, out_mean_);
    io::write_vector(os, out_std_);
    io::write_vector(os, params_);
    save_mlp(os, mean_net_);
    save_adam(os, mean_adam_);
    io::write_i64(os, kernel_adam_->step);
    io::write_vector(os, kernel_adam_->m);
    io::write_vector(os, kernel_adam_->v);
    io::write_matrix(os, xs_);
    io::write_matrix(os, resid_);
}

void GpJointModel::load(std::istream& is) {
    initialized_ = io::read_u64(is) != 0;
    fitted_ = io::read_u64(is) != 0;
    cache_ok_ = false;
    if (!initialized_) return;
    in_mean_ = io::read_vector(is);
    in_std_ = io::read_vector(is);
    out_mean_ = io::read_vector(is);
    out_std_ = io::read_vector(is);
    params_ = io::read_vector(is);
    mean_net_ = load_mlp(is);
    mean_adam_ = load_adam(is);
    kernel_adam_ = std::make_unique<AdamVector>(num_packed());
    kernel_adam_->step = io::read_i64(is);
    kernel_adam_->m = io::read_vector(is);
    kernel_adam_->v = io::read_vector(is);
    xs_ = io::read_matrix(is);
    resid_ = io::read_matrix(is);
    if (fitted_) refresh();
}

}  // namespace hotgp
