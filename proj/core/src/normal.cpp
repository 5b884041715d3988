#include "hotgp/normal.hpp"

#include "hotgp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hotgp {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;
}  // namespace

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("std_normal_quantile: p outside (0, 1)");
    }

    // Acklam's rational approximation (relative error ~1.15e-9).
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step sharpens to ~1e-15; skipped in the extreme tails where
    // exp(x^2/2) would overflow (approximation error is irrelevant out there).
    if (std::abs(x) < 8.0) {
        const double e = std_normal_cdf(x) - p;
        const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double truncated_normal_from_uniform(double mu, double sigma, double lower_quantile,
                                     double u01) {
    if (sigma < 0.0) throw std::invalid_argument("truncated_normal: sigma < 0");
    if (!(lower_quantile >= 0.0 && lower_quantile < 1.0)) {
        throw std::domain_error("truncated_normal: lower_quantile outside [0, 1)");
    }
    if (!(u01 > 0.0 && u01 < 1.0)) {
        throw std::domain_error("truncated_normal: u01 outside (0, 1)");
    }
    if (sigma == 0.0) return mu;
    const double u = lower_quantile + (1.0 - lower_quantile) * u01;
    return mu + sigma * std_normal_quantile(u);
}

double truncated_normal_sample(double mu, double sigma, double lower_quantile, Rng& rng) {
    return truncated_normal_from_uniform(mu, sigma, lower_quantile, rng.uniform_pos01());
}

}  // namespace hotgp
