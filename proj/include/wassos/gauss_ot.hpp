#pragma once

#include <span>
#include <vector>

namespace wassos::gauss {

// Multivariate Gaussian with diagonal covariance, parameterized by mean and
// log standard deviation. The log parameterization keeps std positive by
// construction.
struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;

  std::size_t dim() const { return mean.size(); }
  double std_at(std::size_t j) const;

  // Throws std::invalid_argument if sizes differ or any entry is non-finite.
  void validate() const;

  bool operator==(const DiagonalGaussian&) const = default;
};

// Nonnegative weights summing to 1 (tolerance 1e-9), one per distribution.
struct BarycenterWeights {
  std::vector<double> weights;

  void validate() const;
};

// Squared 2-Wasserstein distance between diagonal Gaussians:
//   sum_j (mu_pj - mu_qj)^2 + (std_pj - std_qj)^2.
// The std term is the diagonal Bures term tr(S1) + tr(S2) - 2 tr((S1 S2)^1/2)
// simplified with sqrt(d1^2 d2^2) = d1 d2 for positive standard deviations.
double w2_squared_diag(const DiagonalGaussian& p, const DiagonalGaussian& q);

// Weighted barycenter under w2_squared_diag: the unique minimizer of
// sum_i lambda_i W2^2(dists[i], v) over diagonal Gaussians, which decomposes
// per dimension into weighted means of the mu's and of the std's.
DiagonalGaussian barycenter_diag(const std::vector<DiagonalGaussian>& dists,
                                 const BarycenterWeights& lambda);

// sum_i lambda_i W2^2(dists[i], candidate).
double wasserstein_loss(const DiagonalGaussian& candidate,
                        const std::vector<DiagonalGaussian>& dists,
                        const BarycenterWeights& lambda);

// KL(p || N(0, I)) = 1/2 sum_j (mu_j^2 + std_j^2 - 1 - 2 log_std_j).
double kl_diag_to_std_normal(const DiagonalGaussian& p);

// mu + exp(log_std) * noise, elementwise.
std::vector<double> sample_reparameterized(const DiagonalGaussian& p,
                                           std::span<const double> noise);

// Test hook: when nonzero, w2_squared_diag adds perturbation * p.mean[0],
// which breaks the symmetry property. Used by the oracle suite's mutation
// check only; never set in production paths.
extern double w2_debug_perturbation;

}  // namespace wassos::gauss
