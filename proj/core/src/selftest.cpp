#include "hotgp/selftest.hpp"

#include "hotgp/jointmodel.hpp"
#include "hotgp/linalg.hpp"
#include "hotgp/mvnormal.hpp"
#include "hotgp/normal.hpp"
#include "hotgp/policy.hpp"
#include "hotgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace hotgp::selftest {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLog2Pi = 1.8378770664093454836;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

Matrix random_psd(int d, Rng& rng) {
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    }
    Matrix cov = a * a.transpose();
    cov.diagonal().array() += 0.1;
    return cov;
}

// Oracle-local Matern-5/2 so the dense comparison shares no kernel code with
// the structured solver.
double oracle_matern(const Vector& a, const Vector& b, const Vector& log_ell,
                     double log_sf2) {
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double d = (a[j] - b[j]) / std::exp(log_ell[j]);
        r2 += d * d;
    }
    const double r = std::sqrt(r2);
    return std::exp(log_sf2) * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) *
           std::exp(-kSqrt5 * r);
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

}  // namespace

// ---------------------------------------------------------------------------
// Criterion: conditional mean/variance against a rejection-window oracle.

SuiteResult conditioning_suite(std::uint64_t seed, int cases, int samples_per_case) {
    SuiteResult result;
    result.name = "conditioning";
    double worst_sigmas = 0.0;

    for (int c = 0; c < cases; ++c) {
        Rng rng = Rng::substream(seed, "selftest_cond", static_cast<std::uint64_t>(c));
        const int d = 2 + static_cast<int>(rng.uniform_index(5));  // 2..6
        Vector mu(d);
        for (int i = 0; i < d; ++i) mu[i] = rng.uniform(-2.0, 2.0);
        const Matrix cov = random_psd(d, rng);
        const MvNormal joint(mu, cov);

        const int obs = static_cast<int>(rng.uniform_index(d));
        const double sig_b = std::sqrt(cov(obs, obs));
        const double v = mu[obs] + sig_b * rng.uniform(-1.0, 1.0);
        const double window = 0.01 * sig_b;

        Vector vvec(1);
        vvec[0] = v;
        const MvNormal cond = gaussian_condition(joint, {obs}, vvec);

        // Rejection sampling from the full joint.
        const Eigen::LLT<Matrix> llt(cov);
        const Matrix l = llt.matrixL();
        Vector acc_sum = Vector::Zero(d - 1);
        Vector acc_sq = Vector::Zero(d - 1);
        std::int64_t n_acc = 0;
        Vector z(d);
        for (int s = 0; s < samples_per_case; ++s) {
            for (int i = 0; i < d; ++i) z[i] = rng.normal();
            const Vector x = mu + l * z;
            if (std::abs(x[obs] - v) >= window) continue;
            n_acc += 1;
            int at = 0;
            for (int i = 0; i < d; ++i) {
                if (i == obs) continue;
                const double xi = x[i];
                acc_sum[at] += xi;
                acc_sq[at] += xi * xi;
                ++at;
            }
        }
        if (n_acc < 500) {
            result.detail = "case " + std::to_string(c) + ": too few accepted samples (" +
                            std::to_string(n_acc) + ")";
            return result;
        }

        const double n = static_cast<double>(n_acc);
        for (int i = 0; i < d - 1; ++i) {
            const double emp_mean = acc_sum[i] / n;
            const double emp_var = std::max(acc_sq[i] / n - emp_mean * emp_mean, 0.0);
            const double se_mean = std::sqrt(cond.cov(i, i) / n);
            const double se_var = cond.cov(i, i) * std::sqrt(2.0 / (n - 1.0));
            const double mean_sigmas = std::abs(emp_mean - cond.mean[i]) / se_mean;
            const double var_sigmas = std::abs(emp_var - cond.cov(i, i)) / se_var;
            worst_sigmas = std::max({worst_sigmas, mean_sigmas, var_sigmas});
            if (mean_sigmas > 4.0 || var_sigmas > 4.0) {
                result.detail = "case " + std::to_string(c) + " dim " + std::to_string(i) +
                                ": " + fmt(std::max(mean_sigmas, var_sigmas)) +
                                " standard errors";
                return result;
            }
        }
    }
    result.passed = true;
    result.detail = std::to_string(cases) + " joints, worst deviation " +
                    fmt(worst_sigmas) + " standard errors (limit 4)";
    return result;
}

// ---------------------------------------------------------------------------
// Criterion: truncated-normal law via Kolmogorov-Smirnov at alpha = 0.01.

SuiteResult truncnorm_suite(std::uint64_t seed, int samples) {
    SuiteResult result;
    result.name = "truncated_normal";
    const double quantiles[] = {0.0, 0.3, 0.5, 0.7, 0.9};
    const double crit = 1.62762 / std::sqrt(static_cast<double>(samples));
    double worst = 0.0;

    for (double lq : quantiles) {
        Rng rng = Rng::substream(seed, "selftest_trunc",
                                 static_cast<std::uint64_t>(lq * 1000));
        std::vector<double> xs(static_cast<std::size_t>(samples));
        for (auto& x : xs) x = truncated_normal_sample(0.0, 1.0, lq, rng);
        std::sort(xs.begin(), xs.end());

        double dstat = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double f = (std_normal_cdf(xs[static_cast<std::size_t>(i)]) - lq) /
                             (1.0 - lq);
            const double hi = (i + 1.0) / samples - f;
            const double lo = f - static_cast<double>(i) / samples;
            dstat = std::max({dstat, hi, lo});
        }
        worst = std::max(worst, dstat);
        if (dstat >= crit) {
            result.detail = "r_min=" + fmt(lq) + ": KS statistic " + fmt(dstat) +
                            " >= critical " + fmt(crit);
            return result;
        }
    }
    result.passed = true;
    result.detail = "worst KS statistic " + fmt(worst) + " < critical " + fmt(crit);
    return result;
}

// ---------------------------------------------------------------------------
// Criterion: Kronecker-structured GP vs the dense exact GP, plus
// finite-difference checks of every marginal-likelihood gradient.

namespace {

struct DenseGp {
    Matrix c;          // B (x) K + noise I, output-major ordering
    Vector resid_vec;  // vec of residuals
    Matrix b;
    Vector log_ell;
    double log_sf2;
    double noise;
};

DenseGp dense_from_model(const GpJointModel& model) {
    DenseGp dense;
    const GpHyperparams h = model.hyperparams();
    const Matrix& x = model.train_inputs();
    const Matrix& resid = model.residuals();
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(resid.cols());

    dense.b = h.mixing_factor * h.mixing_factor.transpose();
    dense.b.diagonal() += h.log_mixing_diag.array().exp().matrix();
    dense.log_ell = h.log_lengthscales;
    dense.log_sf2 = h.log_signal_var;
    dense.noise = std::exp(h.log_noise_var);

    Matrix k(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            k(i, j) = oracle_matern(x.row(i), x.row(j), dense.log_ell, dense.log_sf2);
        }
    }
    dense.c = Matrix::Zero(n * d, n * d);
    for (int a = 0; a < d; ++a) {
        for (int e = 0; e < d; ++e) {
            dense.c.block(a * n, e * n, n, n) = dense.b(a, e) * k;
        }
    }
    dense.c.diagonal().array() += dense.noise;

    dense.resid_vec = Eigen::Map<const Vector>(resid.data(), n * d);
    return dense;
}

double dense_lml(const DenseGp& dense) {
    const Eigen::LLT<Matrix> llt(dense.c);
    const Vector alpha = llt.solve(dense.resid_vec);
    double logdet = 0.0;
    const Matrix l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));
    return -0.5 * (dense.resid_vec.dot(alpha) + logdet +
                   static_cast<double>(dense.c.rows()) * kLog2Pi);
}

}  // namespace

SuiteResult gp_equivalence_suite(std::uint64_t seed, int cases) {
    SuiteResult result;
    result.name = "gp_equivalence";
    double worst_mean = 0.0, worst_cov = 0.0, worst_grad = 0.0;

    for (int c = 0; c < cases; ++c) {
        Rng rng = Rng::substream(seed, "selftest_gp", static_cast<std::uint64_t>(c));
        const int n = 10 + static_cast<int>(rng.uniform_index(21));  // 10..30
        const int d = 2 + static_cast<int>(rng.uniform_index(3));    // 2..4
        const int m = 2 + static_cast<int>(rng.uniform_index(3));    // 2..4

        Matrix x(n, m), y(n, d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
            for (int j = 0; j < d; ++j) y(i, j) = rng.normal();
        }

        GpConfig cfg;
        cfg.standardize = false;
        cfg.mean_epochs = 0;
        cfg.kernel_steps = 0;
        cfg.subsample_cap = n;
        cfg.hidden_layers = 1;
        cfg.hidden_units = 8;
        GpJointModel model(m, d, cfg);
        model.fit(x, y, rng);

        // Randomize all hyperparameters away from their init values.
        Vector packed = model.packed_hyperparameters();
        for (int j = 0; j < m; ++j) packed[j] = rng.uniform(-0.5, 0.5);
        packed[m] = rng.uniform(-0.3, 0.3);
        int at = m + 1;
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b <= a; ++b) {
                packed[at++] = (a == b) ? rng.uniform(0.4, 1.0) : rng.uniform(-0.5, 0.5);
            }
        }
        for (int a = 0; a < d; ++a) packed[at++] = rng.uniform(-2.0, 0.0);
        packed[at] = rng.uniform(-3.0, -1.0);
        model.set_packed_hyperparameters(packed);

        const DenseGp dense = dense_from_model(model);
        const Eigen::LLT<Matrix> llt(dense.c);

        // Prediction equivalence at random query points.
        for (int t = 0; t < 3; ++t) {
            Vector xq(m);
            for (int j = 0; j < m; ++j) xq[j] = rng.uniform(-2.5, 2.5);

            Vector kstar(n);
            for (int i = 0; i < n; ++i) {
                kstar[i] =
                    oracle_matern(model.train_inputs().row(i), xq, dense.log_ell,
                                  dense.log_sf2);
            }
            const double kss = oracle_matern(xq, xq, dense.log_ell, dense.log_sf2);
            Matrix cross(n * d, d);
            for (int a = 0; a < d; ++a) {
                for (int e = 0; e < d; ++e) {
                    cross.block(e * n, a, n, 1) = dense.b(e, a) * kstar;
                }
            }
            const Matrix solved = llt.solve(cross);
            const Vector mu_oracle =
                model.mean_function(xq) + solved.transpose() * dense.resid_vec;
            const Matrix cov_oracle = kss * dense.b - cross.transpose() * solved;

            const JointPrediction pred = model.predict(xq);
            worst_mean =
                std::max(worst_mean, (pred.mean - mu_oracle).cwiseAbs().maxCoeff());
            worst_cov =
                std::max(worst_cov, (pred.cov - cov_oracle).cwiseAbs().maxCoeff());
        }

        // Marginal likelihood and its gradient against finite differences of
        // the dense likelihood path.
        const double lml_fast = model.log_marginal_likelihood();
        const double lml_dense = dense_lml(dense);
        worst_mean = std::max(worst_mean, std::abs(lml_fast - lml_dense) /
                                              std::max(1.0, std::abs(lml_dense)));

        const Vector grad = model.lml_gradient();
        const double h = 1e-5;
        for (Eigen::Index p = 0; p < packed.size(); ++p) {
            Vector up = packed, down = packed;
            up[p] += h;
            down[p] -= h;
            model.set_packed_hyperparameters(up);
            const double lp = model.log_marginal_likelihood();
            model.set_packed_hyperparameters(down);
            const double lm = model.log_marginal_likelihood();
            model.set_packed_hyperparameters(packed);
            const double fd = (lp - lm) / (2.0 * h);
            const double err = std::abs(grad[p] - fd) /
                               std::max({1.0, std::abs(grad[p]), std::abs(fd)});
            worst_grad = std::max(worst_grad, err);
            if (err > 1e-3) {
                result.detail = "case " + std::to_string(c) + " param " +
                                std::to_string(p) + ": gradient rel. err " + fmt(err);
                return result;
            }
        }

        if (worst_mean > 1e-8 || worst_cov > 1e-6) {
            result.detail = "case " + std::to_string(c) + ": mean err " + fmt(worst_mean) +
                            ", cov err " + fmt(worst_cov);
            return result;
        }
    }
    result.passed = true;
    result.detail = "mean err " + fmt(worst_mean) + " (1e-8), cov err " + fmt(worst_cov) +
                    " (1e-6), grad rel err " + fmt(worst_grad) + " (1e-3)";
    return result;
}

// ---------------------------------------------------------------------------
// Criterion: every analytic gradient path against central finite differences.

namespace {

// Apply f to every parameter of a network with +-h perturbations and compare
// the analytic gradient entry; returns the worst relative error.
template <typename LossFn>
double fd_check_mlp(Mlp& net, const MlpGrads& analytic, LossFn&& loss, double h) {
    double worst = 0.0;
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        for (Eigen::Index i = 0; i < net.weights[lu].size(); ++i) {
            double* p = net.weights[lu].data() + i;
            const double orig = *p;
            *p = orig + h;
            const double up = loss();
            *p = orig - h;
            const double down = loss();
            *p = orig;
            const double fd = (up - down) / (2.0 * h);
            const double ga = analytic.dw[lu].data()[i];
            worst = std::max(worst, std::abs(ga - fd) /
                                        std::max({1e-4, std::abs(ga), std::abs(fd)}));
        }
        for (Eigen::Index i = 0; i < net.biases[lu].size(); ++i) {
            double* p = net.biases[lu].data() + i;
            const double orig = *p;
            *p = orig + h;
            const double up = loss();
            *p = orig - h;
            const double down = loss();
            *p = orig;
            const double fd = (up - down) / (2.0 * h);
            const double ga = analytic.db[lu].data()[i];
            worst = std::max(worst, std::abs(ga - fd) /
                                        std::max({1e-4, std::abs(ga), std::abs(fd)}));
        }
    }
    return worst;
}

}  // namespace

SuiteResult gradient_suite(std::uint64_t seed) {
    SuiteResult result;
    result.name = "gradients";
    const double h = 1e-5;
    double worst = 0.0;
    std::ostringstream detail;

    // (a) MLP backward across activations.
    for (const Activation act :
         {Activation::SiLU, Activation::Mish, Activation::Tanh, Activation::ReLU}) {
        Rng rng = Rng::substream(seed, "selftest_grad_mlp",
                                 static_cast<std::uint64_t>(act));
        Mlp net = Mlp::make({3, 8, 6, 2}, act, rng);
        Matrix x(4, 3), g(4, 2);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-1.5, 1.5);
            for (int j = 0; j < 2; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
        }
        MlpCache cache;
        forward_cached(net, x, cache);
        MlpGrads grads = MlpGrads::zeros_like(net);
        backward(net, cache, g, grads);
        const auto loss = [&]() { return (net.forward_batch(x).cwiseProduct(g)).sum(); };
        worst = std::max(worst, fd_check_mlp(net, grads, loss, h));
    }
    detail << "mlp " << fmt(worst);
    if (worst > 1e-3) {
        result.detail = "mlp backward rel. err " + fmt(worst);
        return result;
    }

    // (b) Ensemble Gaussian NLL.
    {
        Rng rng = Rng::substream(seed, "selftest_grad_nll");
        Mlp net = Mlp::make({3, 8, 4}, Activation::SiLU, rng);  // D = 2
        GaussianHead head;
        Matrix x(5, 3), y(5, 2);
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
            for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
        }
        MlpGrads grads = MlpGrads::zeros_like(net);
        ensemble_nll_loss(net, head, x, y, &grads);
        const auto loss = [&]() { return ensemble_nll_loss(net, head, x, y, nullptr); };
        const double e = fd_check_mlp(net, grads, loss, h);
        worst = std::max(worst, e);
        detail << ", nll " << fmt(e);
        if (e > 1e-3) {
            result.detail = "ensemble NLL rel. err " + fmt(e);
            return result;
        }
    }

    // (c) SAC actor (with tanh change-of-variables term).
    {
        Rng rng = Rng::substream(seed, "selftest_grad_sac");
        SacConfig cfg;
        cfg.hidden_layers = 1;
        cfg.hidden_units = 8;
        SacAgent agent(3, 2, cfg, rng);
        Matrix s(4, 3), noise(4, 2);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 3; ++j) s(i, j) = rng.uniform(-1.0, 1.0);
            for (int j = 0; j < 2; ++j) noise(i, j) = rng.normal();
        }
        MlpGrads grads = MlpGrads::zeros_like(agent.actor());
        agent.actor_loss(s, noise, &grads);
        const auto loss = [&]() { return agent.actor_loss(s, noise, nullptr); };
        const double e = fd_check_mlp(agent.actor(), grads, loss, h);
        worst = std::max(worst, e);
        detail << ", sac " << fmt(e);
        if (e > 1e-3) {
            result.detail = "SAC actor rel. err " + fmt(e);
            return result;
        }
    }

    // (d) DDPG actor.
    {
        Rng rng = Rng::substream(seed, "selftest_grad_ddpg");
        DdpgConfig cfg;
        cfg.hidden_layers = 1;
        cfg.hidden_units = 8;
        DdpgAgent agent(3, 2, cfg, rng);
        Matrix s(4, 3);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 3; ++j) s(i, j) = rng.uniform(-1.0, 1.0);
        }
        MlpGrads grads = MlpGrads::zeros_like(agent.actor());
        agent.actor_loss(s, &grads);
        const auto loss = [&]() { return agent.actor_loss(s, nullptr); };
        const double e = fd_check_mlp(agent.actor(), grads, loss, h);
        worst = std::max(worst, e);
        detail << ", ddpg " << fmt(e);
        if (e > 1e-3) {
            result.detail = "DDPG actor rel. err " + fmt(e);
            return result;
        }
    }

    result.passed = true;
    result.detail = "worst rel. err: " + detail.str() + " (limit 1e-3)";
    return result;
}

std::vector<SuiteResult> run_all(std::uint64_t seed) {
    return {
        conditioning_suite(seed),
        truncnorm_suite(seed),
        gp_equivalence_suite(seed),
        gradient_suite(seed),
    };
}

}  // namespace hotgp::selftest
