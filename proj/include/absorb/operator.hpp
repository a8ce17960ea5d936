#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <vector>

#include "absorb/grid.hpp"

namespace absorb {

using cdouble = std::complex<double>;
using SparseC = Eigen::SparseMatrix<cdouble>;

struct Units {
  double hbar = 1.0;
  double m = 1.0;
  double c = 1.0;
};

// Boundary-flux functional entry. The instantaneous outflow density through
// this (node, face) cell is |factor * psi_node|^2 where psi_node is the
// node's component block. For the Schrodinger operator the factor is the
// 1x1 matrix [sqrt(hbar*kappa/m * w_b)]; for Dirac it is a PSD square root
// of c * w_b * P+ (n.alpha) P+.
struct FluxTerm {
  long node = 0;
  FaceId face;
  Eigen::MatrixXcd factor;
};

// Discrete (generally non-Hermitian) Hamiltonian together with the grid
// metric it lives in and its boundary-flux functional. Immutable after
// assembly.
struct OperatorMatrix {
  SparseC mat;
  std::shared_ptr<const Grid> grid;
  int components = 1;
  Units units;
  std::vector<FluxTerm> flux;
  Eigen::VectorXd dof_weights;  // grid weights expanded per component

  long dim() const { return mat.rows(); }
  void init_dof_weights();
};

// Adjoint with respect to the weighted metric: <phi,H psi>_w = <H' phi,psi>_w
// exactly. The flux functional is not carried over (it belongs to the
// absorbing assembly, not to the metric-level operation).
OperatorMatrix weighted_adjoint(const OperatorMatrix& H);

// Residual of the discrete flux identity
//   Im<psi,H psi>_w = -(hbar/2) * sum_b |F_b psi_b|^2,
// maximised over the probes and normalised by ||psi||_w^2. Inner products
// are accumulated in extended precision so the returned number measures the
// scheme, not summation roundoff.
double dissipativity_defect(const OperatorMatrix& H,
                            const std::vector<Eigen::VectorXcd>& probes);

// ||H H' - H' H||_F / ||H||_F^2 with the weighted adjoint. Dense; guarded.
double normality_defect(const OperatorMatrix& H);

// Total instantaneous outflow density sum_b |F_b psi_b|^2.
double outflow_density(const OperatorMatrix& H, const Eigen::VectorXcd& psi);

// Im<psi,H psi>_w with extended-precision accumulation.
double im_quadratic_form(const OperatorMatrix& H, const Eigen::VectorXcd& psi);

Eigen::MatrixXcd dense(const OperatorMatrix& H);

// Thrown when a dense-only diagnostic is requested above desk scale.
struct SizeGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace absorb
