#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace wassos::oracle {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst error observed, or what failed and where
};

// Metric properties of the squared 2-Wasserstein distance on 200 random
// diagonal-Gaussian triples of dimension <= 8: symmetry, nonnegativity,
// zero iff equal, and the triangle inequality of the square root,
// tolerance 1e-9. The w2_debug_perturbation hook breaks symmetry here.
SuiteResult check_w2_metric(std::uint64_t seed);

// Closed-form barycenter vs brute force: on 100 random 1-D problems (up to
// 5 distributions) its objective must not exceed the minimum over a
// 1e-3-step grid spanning the input hull by more than 1e-6; on 100 random
// multi-dimensional problems it must beat 1,000 random hull candidates.
SuiteResult check_barycenter(std::uint64_t seed);

// Analytic KL to the standard normal vs a 1e5-sample Monte-Carlo estimate
// on 20 random distributions; agreement within 3 standard errors.
SuiteResult check_kl_monte_carlo(std::uint64_t seed);

// Medoid selection vs exhaustive search on 100 random clusters of up to 10
// members, both distance notions, including lowest-index tie-breaking.
SuiteResult check_medoid(std::uint64_t seed);

// Central finite differences against backward() for every loss component in
// isolation plus the weighted total, across both strategies and all ablation
// toggles, and for the adversary objective, on a 2-document cluster. Max
// relative error 1e-4.
SuiteResult check_gradients(std::uint64_t seed);

// Runs every suite, one PASS/FAIL line each to log; true when all pass.
bool run_all(std::uint64_t seed, std::ostream& log);

}  // namespace wassos::oracle
