#include "hotgp/jointmodel.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"
#include "hotgp/serialize.hpp"

#include <cmath>

namespace hotgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void identity_or_stats(bool standardize, const Matrix& m, Vector& mean, Vector& stddev) {
    if (!standardize) {
        mean = Vector::Zero(m.cols());
        stddev = Vector::Ones(m.cols());
        return;
    }
    const double n = static_cast<double>(m.rows());
    mean = m.colwise().mean();
    Matrix centered = m.rowwise() - mean.transpose();
    stddev = (centered.array().square().colwise().sum() / n).sqrt();
    for (Eigen::Index j = 0; j < stddev.size(); ++j) {
        if (stddev[j] < 1e-8) stddev[j] = 1.0;
    }
}
}  // namespace

EnsembleJointModel::EnsembleJointModel(int input_dim, int output_dim, EnsembleConfig cfg)
    : input_dim_(input_dim), output_dim_(output_dim), cfg_(cfg) {
    if (input_dim < 1 || output_dim < 1) throw ShapeError("EnsembleJointModel: bad dims");
    head_.logvar_min = cfg.logvar_min;
    head_.logvar_max = cfg.logvar_max;
}

double ensemble_nll_loss(const Mlp& net, const GaussianHead& head, const Matrix& x,
                         const Matrix& y, MlpGrads* grads) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(y.cols());
    MlpCache cache;
    const Matrix out = forward_cached(net, x, cache);

    Matrix upstream = Matrix::Zero(n, 2 * d);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double raw = out(i, d + j);
            const double lv = head.clamp(raw);
            const double inv_var = std::exp(-lv);
            const double res = out(i, j) - y(i, j);
            loss += 0.5 * (res * res * inv_var + lv + kLog2Pi);
            upstream(i, j) = res * inv_var * inv_n;
            upstream(i, d + j) =
                0.5 * (1.0 - res * res * inv_var) * head.clamp_grad(raw) * inv_n;
        }
    }
    if (grads != nullptr) backward(net, cache, upstream, *grads);
    return loss * inv_n;
}

void EnsembleJointModel::fit(const Matrix& x, const Matrix& y, Rng& rng) {
    if (x.rows() != y.rows()) throw ShapeError("EnsembleJointModel::fit: row mismatch");
    if (x.cols() != input_dim_ || y.cols() != output_dim_) {
        throw ShapeError("EnsembleJointModel::fit: column mismatch");
    }
    if (x.rows() < 2) throw DegenerateDataError("EnsembleJointModel::fit: need 2+ rows");
    require_finite(x, "EnsembleJointModel::fit inputs");
    require_finite(y, "EnsembleJointModel::fit targets");

    const int n = static_cast<int>(x.rows());
    identity_or_stats(cfg_.standardize, x, in_mean_, in_std_);
    identity_or_stats(cfg_.standardize, y, out_mean_, out_std_);
    Matrix xs = (x.rowwise() - in_mean_.transpose()) * in_std_.cwiseInverse().asDiagonal();
    Matrix ys = (y.rowwise() - out_mean_.transpose()) * out_std_.cwiseInverse().asDiagonal();

    if (!initialized_) {
        std::vector<int> widths;
        widths.push_back(input_dim_);
        for (int l = 0; l < cfg_.hidden_layers; ++l) widths.push_back(cfg_.hidden_units);
        widths.push_back(2 * output_dim_);
        nets_.clear();
        adams_.clear();
        for (int m = 0; m < cfg_.members; ++m) {
            nets_.push_back(Mlp::make(widths, cfg_.activation, rng));
            adams_.push_back(AdamState::zeros_like(nets_.back()));
        }
        initialized_ = true;
    }

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg_.lr;
    for (int m = 0; m < member_count(); ++m) {
        // Independent bootstrap resample per member.
        Matrix xb(n, input_dim_), yb(n, output_dim_);
        for (int i = 0; i < n; ++i) {
            const auto pick = rng.uniform_index(n);
            xb.row(i) = xs.row(pick);
            yb.row(i) = ys.row(pick);
        }
        auto& net = nets_[static_cast<std::size_t>(m)];
        auto& adam = adams_[static_cast<std::size_t>(m)];
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            for (int start = 0; start < n; start += cfg_.batch) {
                const int bsz = std::min(cfg_.batch, n - start);
                MlpGrads grads = MlpGrads::zeros_like(net);
                ensemble_nll_loss(net, head_, xb.middleRows(start, bsz),
                                  yb.middleRows(start, bsz), &grads);
                adam_step(net, grads, adam, adam_cfg);
            }
        }
    }
    fitted_ = true;
}

std::pair<Vector, Vector> EnsembleJointModel::member_output(int member,
                                                            const Vector& x_std) const {
    const Vector out = nets_[static_cast<std::size_t>(member)].forward(x_std);
    Vector mu = out.head(output_dim_);
    Vector var(output_dim_);
    for (int j = 0; j < output_dim_; ++j) var[j] = std::exp(head_.clamp(out[output_dim_ + j]));
    return {std::move(mu), std::move(var)};
}

JointPrediction EnsembleJointModel::prediction_from(const Vector& mu_std,
                                                    const Vector& var_std) const {
    JointPrediction pred;
    pred.mean = mu_std.cwiseProduct(out_std_) + out_mean_;
    pred.cov = Matrix::Zero(output_dim_, output_dim_);
    pred.cov.diagonal() =
        var_std.cwiseProduct(out_std_.cwiseProduct(out_std_));
    return pred;
}

JointPrediction EnsembleJointModel::predict(const Vector& x) const {
    if (!fitted_) throw NotFittedError("EnsembleJointModel::predict: not fitted");
    if (x.size() != input_dim_) throw ShapeError("EnsembleJointModel::predict: input size");
    const Vector x_std = (x - in_mean_).cwiseQuotient(in_std_);

    const int e = member_count();
    Vector mean_of_means = Vector::Zero(output_dim_);
    Vector mean_of_vars = Vector::Zero(output_dim_);
    Vector mean_of_sq = Vector::Zero(output_dim_);
    for (int m = 0; m < e; ++m) {
        const auto [mu, var] = member_output(m, x_std);
        mean_of_means += mu;
        mean_of_vars += var;
        mean_of_sq += mu.cwiseProduct(mu);
    }
    mean_of_means /= e;
    mean_of_vars /= e;
    mean_of_sq /= e;
    // Total variance: mean member variance plus variance of member means.
    Vector total = mean_of_vars + (mean_of_sq - mean_of_means.cwiseProduct(mean_of_means))
                                      .cwiseMax(0.0);
    return prediction_from(mean_of_means, total);
}

JointPrediction EnsembleJointModel::predict_member(const Vector& x, Rng& rng) const {
    if (!fitted_) throw NotFittedError("EnsembleJointModel::predict_member: not fitted");
    const Vector x_std = (x - in_mean_).cwiseQuotient(in_std_);
    const auto pick = static_cast<int>(rng.uniform_index(member_count()));
    const auto [mu, var] = member_output(pick, x_std);
    return prediction_from(mu, var);
}

double EnsembleJointModel::nll(const Vector& x, const Vector& y) const {
    const JointPrediction pred = predict(x);
    double acc = 0.0;
    for (int j = 0; j < output_dim_; ++j) {
        const double var = std::max(pred.cov(j, j), 1e-12);
        const double res = y[j] - pred.mean[j];
        acc += 0.5 * (res * res / var + std::log(var) + kLog2Pi);
    }
    return acc;
}

void EnsembleJointModel::save(std::ostream& os) const {
    io::write_u64(os, initialized_ ? 1 : 0);
    io::write_u64(os, fitted_ ? 1 : 0);
    if (!initialized_) return;
    io::write_vector(os, in_mean_);
    io::write_vector(os, in_std_);
    io::write_vector(os, out_mean_);
    io::write_vector(os, out_std_);
    io::write_u64(os, nets_.size());
    for (std::size_t m = 0; m < nets_.size(); ++m) {
        save_mlp(os, nets_[m]);
        save_adam(os, adams_[m]);
    }
}

void EnsembleJointModel::load(std::istream& is) {
    initialized_ = io::read_u64(is) != 0;
    fitted_ = io::read_u64(is) != 0;
    if (!initialized_) return;
    in_mean_ = io::read_vector(is);
    in_std_ = io::read_vector(is);
    out_mean_ = io::read_vector(is);
    out_std_ = io::read_vector(is);
    const auto count = io::read_u64(is);
    nets_.clear();
    adams_.clear();
    for (std::uint64_t m = 0; m < count; ++m) {
        nets_.push_back(load_mlp(is));
        adams_.push_back(load_adam(is));
    }
}

}  // namespace hotgp
