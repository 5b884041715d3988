#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace hotgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* what);
bool symmetric_within(const Matrix& m, double rel_tol = 1e-9);

/// Running record of jitter escalations, one instance per thread.
struct JitterStats {
    std::uint64_t escalations = 0;
    double max_jitter = 0.0;
};
JitterStats& jitter_stats();

/// Starting jitter for near-singular covariances: 1e-9 * trace(m) / dim.
double default_jitter(const Matrix& m);

// Lower-triangular L with L * L^T = m + jitter * I. If the factorization
// fails, the jitter escalates tenfold (starting from default_jitter(m) when
// the caller passed 0) up to 1e-4 absolute. Escalations are counted in
// jitter_stats() and echoed to stderr when HOTGP_LOG_JITTER is set.
Matrix cholesky(const Matrix& m, double jitter = 0.0);

}  // namespace hotgp
