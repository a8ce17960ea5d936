#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <utility>
#include <vector>

#include "absorb/operator.hpp"

namespace absorb {

// Boundary mass detected during one Crank-Nicolson step, charged at the
// midpoint state so that sum_b mass_b = ||psi_n||_w^2 - ||psi_{n+1}||_w^2
// holds exactly (up to the linear-solve residual).
struct StepFluxRecord {
  std::vector<double> mass;  // aligned with OperatorMatrix::flux
  double total = 0.0;
  double norm2_before = 0.0;
  double norm2_after = 0.0;
};

struct FluxSink {
  virtual ~FluxSink() = default;
  virtual void record(long step, const StepFluxRecord& r) = 0;
};

// Crank-Nicolson stepper: psi -> (I + i tau H/2hbar)^{-1} (I - i tau H/2hbar) psi.
// The Cayley transform of a dissipative -iH, hence a contraction for every
// tau. Factorization is done once and shared; the object is immutable and
// safe for concurrent stepping.
class CNPropagator {
 public:
  CNPropagator(std::shared_ptr<const OperatorMatrix> H, double tau);

  std::pair<Eigen::VectorXcd, StepFluxRecord> step(const Eigen::VectorXcd& psi) const;
  Eigen::VectorXcd evolve(Eigen::VectorXcd psi, long n_steps,
                          FluxSink* sink = nullptr) const;

  double tau() const { return tau_; }
  const OperatorMatrix& op() const { return *H_; }
  std::shared_ptr<const OperatorMatrix> op_ptr() const { return H_; }

 private:
  std::shared_ptr<const OperatorMatrix> H_;
  double tau_;
  SparseC rhs_;
  Eigen::SparseLU<SparseC> lu_;
};

// Dense exp(-i H t / hbar) psi0 reference, for convergence checks.
Eigen::VectorXcd expm_oracle(const OperatorMatrix& H, double t,
                             const Eigen::VectorXcd& psi0);

}  // namespace absorb
