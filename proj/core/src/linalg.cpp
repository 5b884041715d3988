#include "hotgp/linalg.hpp"

#include "hotgp/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace hotgp {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw ShapeError(std::string(what) + ": non-finite entries");
    }
}

bool symmetric_within(const Matrix& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

JitterStats& jitter_stats() {
    thread_local JitterStats stats;
    return stats;
}

double default_jitter(const Matrix& m) {
    if (m.rows() == 0) return 1e-12;
    const double t = m.trace() / static_cast<double>(m.rows());
    return std::max(1e-9 * t, 1e-12);
}

namespace {
constexpr double kMaxJitter = 1e-4;

void log_escalation(double jitter) {
    auto& stats = jitter_stats();
    stats.escalations += 1;
    stats.max_jitter = std::max(stats.max_jitter, jitter);
    if (std::getenv("HOTGP_LOG_JITTER") != nullptr) {
        std::fprintf(stderr, "hotgp: cholesky jitter escalated to %.3e\n", jitter);
    }
}
}  // namespace

Matrix cholesky(const Matrix& m, double jitter) {
    if (m.rows() != m.cols()) {
        throw ShapeError("cholesky: matrix not square");
    }
    require_finite(m, "cholesky");
    if (!symmetric_within(m)) {
        throw ShapeError("cholesky: matrix not symmetric within tolerance");
    }

    double j = jitter;
    for (;;) {
        Matrix c = m;
        if (j > 0.0) c.diagonal().array() += j;
        Eigen::LLT<Matrix> llt(c);
        if (llt.info() == Eigen::Success) {
            if (j > jitter) log_escalation(j);
            return llt.matrixL();
        }
        if (j >= kMaxJitter) {
            std::ostringstream msg;
            msg << "cholesky: not positive definite at max jitter " << kMaxJitter
                << " (dim " << m.rows() << ")";
            throw NotPsdError(msg.str());
        }
        j = (j == 0.0) ? default_jitter(m) : j * 10.0;
        if (j > kMaxJitter) j = kMaxJitter;
    }
}

}  // namespace hotgp
