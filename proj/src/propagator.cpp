#include "absorb/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <stdexcept>

namespace absorb {

CNPropagator::CNPropagator(std::shared_ptr<const OperatorMatrix> H, double tau)
    : H_(std::move(H)), tau_(tau) {
  if (tau <= 0.0) throw std::invalid_argument("time step must be positive");
  const long n = H_->dim();
  SparseC id(n, n);
  id.setIdentity();
  cdouble z(0.0, tau_ / (2.0 * H_->units.hbar));
  SparseC lhs = id + z * H_->mat;
  rhs_ = id - z * H_->mat;
  lu_.compute(lhs);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error(
        "internal error: Crank-Nicolson matrix factorization failed (cannot "
        "happen for a dissipative operator)");
}

std::pair<Eigen::VectorXcd, StepFluxRecord> CNPropagator::step(
    const Eigen::VectorXcd& psi) const {
  StepFluxRecord rec;
  rec.norm2_before = wnorm2(H_->grid->weights(), psi, H_->components);
  Eigen::VectorXcd next = lu_.solve(rhs_ * psi);
  rec.norm2_after = wnorm2(H_->grid->weights(), next, H_->components);

  Eigen::VectorXcd mid = 0.5 * (psi + next);
  const int nc = H_->components;
  rec.mass.reserve(H_->flux.size());
  for (const FluxTerm& t : H_->flux) {
    double m = tau_ * (t.factor * mid.segment(t.node * nc, nc)).squaredNorm();
    rec.mass.push_back(m);
    rec.total += m;
  }
  return {std::move(next), std::move(rec)};
}

Eigen::VectorXcd CNPropagator::evolve(Eigen::VectorXcd psi, long n_steps,
                                      FluxSink* sink) const {
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  for (long s = 0; s < n_steps; ++s) {
    auto [next, rec] = step(psi);
    psi = std::move(next);
    if (sink) sink->record(s, rec);
  }
  return psi;
}

Eigen::VectorXcd expm_oracle(const OperatorMatrix& H, double t,
                             const Eigen::VectorXcd& psi0) {
  Eigen::MatrixXcd A = dense(H);  // size-guarded
  A *= cdouble(0.0, -t / H.units.hbar);
  return A.exp() * psi0;
}

}  // namespace absorb
