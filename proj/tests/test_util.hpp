#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "absorb/detection.hpp"

namespace testutil {

using namespace absorb;

inline std::shared_ptr<const Grid> interval_grid(double lo, double hi, int nodes) {
  DomainSpec d;
  d.kind = DomainSpec::Kind::Interval;
  d.extents = {{lo, hi}};
  return std::make_shared<Grid>(Grid::build(d, nodes));
}

inline std::shared_ptr<const OperatorMatrix> interval_op(
    double lo, double hi, int nodes, double kappa, double nu = 0.0,
    bool allow_emitting = false) {
  auto g = interval_grid(lo, hi, nodes);
  BoundaryParams bp;
  bp.kappa = kappa;
  bp.nu = nu;
  bp.allow_emitting = allow_emitting;
  return std::make_shared<OperatorMatrix>(
      assemble_schrodinger(g, zero_potential(*g), bp));
}

inline Eigen::VectorXcd random_state(long dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(dim);
  for (long i = 0; i < dim; ++i) v[i] = cdouble(nd(rng), nd(rng));
  return v;
}

inline Eigen::VectorXcd random_normalized(const OperatorMatrix& H, uint64_t seed) {
  Eigen::VectorXcd v = random_state(H.dim(), seed);
  return v / std::sqrt(wnorm2(H.grid->weights(), v, H.components));
}

inline Eigen::VectorXcd gaussian_packet(const Grid& g, double center, double sigma,
                                        double k) {
  Eigen::VectorXcd psi(g.node_count());
  for (long i = 0; i < g.node_count(); ++i) {
    Eigen::VectorXd x = g.position(i);
    cdouble amp = 1.0;
    for (long a = 0; a < x.size(); ++a) {
      double d = x[a] - center;
      amp *= std::exp(cdouble(-d * d / (4.0 * sigma * sigma), k * x[a]));
    }
    psi[i] = amp;
  }
  return psi / std::sqrt(wnorm2(g.weights(), psi));
}

// Pearson chi-squared p-value of observed counts against expected
// probabilities; bins with small expectation are merged into a tail bin.
inline double chi2_pvalue(const std::vector<double>& observed,
                          const std::vector<double>& expected_prob,
                          double n_samples, double min_expected = 5.0) {
  double chi2 = 0.0, tail_obs = 0.0, tail_exp = 0.0;
  int dof = -1;
  for (size_t i = 0; i < observed.size(); ++i) {
    double e = expected_prob[i] * n_samples;
    if (e < min_expected) {
      tail_obs += observed[i];
      tail_exp += e;
      continue;
    }
    chi2 += (observed[i] - e) * (observed[i] - e) / e;
    ++dof;
  }
  if (tail_exp >= min_expected) {
    chi2 += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
    ++dof;
  }
  if (dof < 1) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

}  // namespace testutil
