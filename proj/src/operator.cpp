#include "absorb/operator.hpp"

#include <stdexcept>

namespace absorb {

namespace {
constexpr long kDenseGuard = 2048;

using cldouble = std::complex<long double>;

// H*psi with long double accumulation; H entries and psi stay double.
Eigen::VectorX<cldouble> apply_ld(const SparseC& H, const Eigen::VectorXcd& psi) {
  Eigen::VectorX<cldouble> y = Eigen::VectorX<cldouble>::Zero(H.rows());
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseC::InnerIterator it(H, k); it; ++it)
      y[it.row()] += cldouble(it.value()) * cldouble(psi[it.col()]);
  return y;
}
}  // namespace

void OperatorMatrix::init_dof_weights() {
  const Eigen::VectorXd& w = grid->weights();
  dof_weights.resize(w.size() * components);
  for (long i = 0; i < w.size(); ++i)
    for (int c = 0; c < components; ++c) dof_weights[i * components + c] = w[i];
}

OperatorMatrix weighted_adjoint(const OperatorMatrix& H) {
  OperatorMatrix A;
  A.grid = H.grid;
  A.components = H.components;
  A.units = H.units;
  A.dof_weights = H.dof_weights;

  const Eigen::VectorXd& w = H.dof_weights;
  std::vector<Eigen::Triplet<cdouble>> trips;
  trips.reserve(H.mat.nonZeros());
  for (int k = 0; k < H.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(H.mat, k); it; ++it)
      trips.emplace_back(it.col(), it.row(),
                         (w[it.row()] / w[it.col()]) * std::conj(it.value()));
  A.mat.resize(H.mat.rows(), H.mat.cols());
  A.mat.setFromTriplets(trips.begin(), trips.end());
  return A;
}

double outflow_density(const OperatorMatrix& H, const Eigen::VectorXcd& psi) {
  double s = 0.0;
  const int nc = H.components;
  for (const FluxTerm& t : H.flux)
    s += (t.factor * psi.segment(t.node * nc, nc)).squaredNorm();
  return s;
}

double im_quadratic_form(const OperatorMatrix& H, const Eigen::VectorXcd& psi) {
  auto y = apply_ld(H.mat, psi);
  cldouble s = 0.0;
  for (long i = 0; i < psi.size(); ++i)
    s += (long double)H.dof_weights[i] * std::conj(cldouble(psi[i])) * y[i];
  return static_cast<double>(s.imag());
}

double dissipativity_defect(const OperatorMatrix& H,
                            const std::vector<Eigen::VectorXcd>& probes) {
  if (probes.empty()) throw std::invalid_argument("dissipativity_defect: empty probe list");
  double worst = 0.0;
  for (const auto& psi : probes) {
    double n2 = wnorm2(H.grid->weights(), psi, H.components);
    if (n2 == 0.0) throw std::invalid_argument("dissipativity_defect: zero probe");
    double res = im_quadratic_form(H, psi) +
                 0.5 * H.units.hbar * outflow_density(H, psi);
    worst = std::max(worst, std::abs(res) / n2);
  }
  return worst;
}

Eigen::MatrixXcd dense(const OperatorMatrix& H) {
  if (H.dim() > kDenseGuard)
    throw SizeGuardError("dense operator diagnostics limited to dimension 2048");
  return Eigen::MatrixXcd(H.mat);
}

double normality_defect(const OperatorMatrix& H) {
  Eigen::MatrixXcd Hd = dense(H);
  Eigen::MatrixXcd Ad = dense(weighted_adjoint(H));
  double hf = Hd.norm();
  return (Hd * Ad - Ad * Hd).norm() / (hf * hf);
}

}  // namespace absorb
