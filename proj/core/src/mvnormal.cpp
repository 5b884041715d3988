#include "hotgp/mvnormal.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/rng.hpp"

#include <algorithm>

namespace hotgp {

MvNormal::MvNormal(Vector mean_in, Matrix cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
        throw ShapeError("MvNormal: dimension mismatch");
    }
    if (!mean.allFinite() || !cov.allFinite()) {
        throw ShapeError("MvNormal: non-finite entries");
    }
    if (!symmetric_within(cov)) {
        throw ShapeError("MvNormal: covariance not symmetric within tolerance");
    }
}

MvNormal gaussian_condition(const MvNormal& joint, const std::vector<int>& observed_idx,
                            const Vector& observed_vals) {
    const int d = joint.dim();
    const int nb = static_cast<int>(observed_idx.size());
    if (static_cast<int>(observed_vals.size()) != nb) {
        throw ShapeError("gaussian_condition: observed index/value size mismatch");
    }

    std::vector<char> is_observed(static_cast<std::size_t>(d), 0);
    for (int idx : observed_idx) {
        if (idx < 0 || idx >= d) throw ShapeError("gaussian_condition: index out of range");
        if (is_observed[static_cast<std::size_t>(idx)]) {
            throw ShapeError("gaussian_condition: duplicate observed index");
        }
        is_observed[static_cast<std::size_t>(idx)] = 1;
    }

    std::vector<int> free_idx;
    free_idx.reserve(static_cast<std::size_t>(d - nb));
    for (int i = 0; i < d; ++i) {
        if (!is_observed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }
    const int na = static_cast<int>(free_idx.size());

    Vector mu_a(na), mu_b(nb);
    Matrix s_aa(na, na), s_ab(na, nb), s_bb(nb, nb);
    for (int i = 0; i < na; ++i) {
        mu_a[i] = joint.mean[free_idx[static_cast<std::size_t>(i)]];
        for (int j = 0; j < na; ++j) {
            s_aa(i, j) = joint.cov(free_idx[static_cast<std::size_t>(i)],
                                   free_idx[static_cast<std::size_t>(j)]);
        }
        for (int j = 0; j < nb; ++j) {
            s_ab(i, j) = joint.cov(free_idx[static_cast<std::size_t>(i)],
                                   observed_idx[static_cast<std::size_t>(j)]);
        }
    }
    for (int i = 0; i < nb; ++i) {
        mu_b[i] = joint.mean[observed_idx[static_cast<std::size_t>(i)]];
        for (int j = 0; j < nb; ++j) {
            s_bb(i, j) = joint.cov(observed_idx[static_cast<std::size_t>(i)],
                                   observed_idx[static_cast<std::size_t>(j)]);
        }
    }

    if (nb == 0) return MvNormal(mu_a, s_aa);

    const Matrix l = cholesky(s_bb);
    const auto lower = l.triangularView<Eigen::Lower>();
    const auto upper = l.transpose().triangularView<Eigen::Upper>();

    // S_bb^-1 (v - mu_b) and S_bb^-1 S_ba through the factor.
    Vector y = lower.solve(observed_vals - mu_b);
    y = upper.solve(y);
    const Matrix z = lower.solve(Matrix(s_ab.transpose()));  // nb x na

    Vector cond_mean = mu_a + s_ab * y;
    Matrix cond_cov = s_aa - z.transpose() * z;
    cond_cov = 0.5 * (cond_cov + cond_cov.transpose()).eval();
    return MvNormal(std::move(cond_mean), std::move(cond_cov));
}

Vector mvnormal_sample(const MvNormal& dist, Rng& rng) {
    const int d = dist.dim();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(dist.cov);
    Vector scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Vector z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    return dist.mean + eig.eigenvectors() * scale.asDiagonal() * z;
}

}  // namespace hotgp
