#pragma once

namespace hotgp {

class Rng;

double std_normal_pdf(double x);
double std_normal_cdf(double x);

/// Inverse standard-normal CDF; throws std::domain_error outside (0, 1).
/// Rational approximation with one Halley refinement; round-trips with
/// std_normal_cdf to better than 1e-10 over p in [1e-8, 1 - 1e-8].
double std_normal_quantile(double p);

// Draw from N(mu, sigma^2) truncated below its lower_quantile point, with the
// uniform variate supplied by the caller (u01 in (0, 1)). The result is
// mu + sigma * quantile(lq + (1 - lq) * u01), so it never falls below the
// truncation point mu + sigma * quantile(lq).
double truncated_normal_from_uniform(double mu, double sigma, double lower_quantile,
                                     double u01);

double truncated_normal_sample(double mu, double sigma, double lower_quantile, Rng& rng);

}  // namespace hotgp
