#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hotgp::selftest {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Independent-oracle suites. Each checks a core numeric path against a
// brute-force or numeric alternative: Monte-Carlo rejection for Gaussian
// conditioning, a Kolmogorov-Smirnov test for truncated-normal sampling, a
// dense (Kronecker-free) GP plus finite differences for the structured
// solver, and finite differences for every analytic gradient path.

SuiteResult conditioning_suite(std::uint64_t seed, int cases = 50,
                               int samples_per_case = 1000000);
SuiteResult truncnorm_suite(std::uint64_t seed, int samples = 10000);
SuiteResult gp_equivalence_suite(std::uint64_t seed, int cases = 20);
SuiteResult gradient_suite(std::uint64_t seed);

std::vector<SuiteResult> run_all(std::uint64_t seed);

}  // namespace hotgp::selftest
