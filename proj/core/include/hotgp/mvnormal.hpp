#pragma once

#include "hotgp/linalg.hpp"

#include <vector>

namespace hotgp {

class Rng;

struct MvNormal {
    Vector mean;
    Matrix cov;

    MvNormal(Vector mean_in, Matrix cov_in);
    int dim() const { return static_cast<int>(mean.size()); }
};

// Condition a joint Gaussian on observed coordinates:
//   N(mu_a + S_ab S_bb^-1 (v - mu_b),  S_aa - S_ab S_bb^-1 S_ba)
// over the remaining coordinates (in their original order). S_bb is
// factorized with jitter escalation; throws NotPsdError past max jitter.
MvNormal gaussian_condition(const MvNormal& joint, const std::vector<int>& observed_idx,
                            const Vector& observed_vals);

// Draw via symmetric eigendecomposition with negative eigenvalues clamped to
// zero, so exactly-singular covariances sample exactly (no jitter noise).
Vector mvnormal_sample(const MvNormal& dist, Rng& rng);

}  // namespace hotgp
