#pragma once

#include <memory>
#include <vector>

#include "absorb/operator.hpp"
#include "absorb/schrodinger.hpp"

namespace absorb {

// Dirac alpha/beta matrices. spin_dim 4 gives the standard Dirac
// representation; spin_dim 2 gives the 1+1 dimensional two-spinor reduction
// (alpha = sigma_x, beta = sigma_z).
struct DiracAlgebra {
  int spin_dim = 4;
  std::vector<Eigen::MatrixXcd> alpha;
  Eigen::MatrixXcd beta;
};

DiracAlgebra dirac_matrices(int spin_dim);

// Projector onto the eigenspace of u.alpha + theta*beta with eigenvalue
// +sqrt(1+theta^2); spinors in its range have outward current
// psi' (u.alpha) psi >= (sqrt(1+theta^2) - |theta|) |psi|^2.
struct BoundaryProjector {
  Eigen::VectorXd u;
  double theta = 0.0;
  Eigen::MatrixXcd P;
};

BoundaryProjector boundary_projector(const DiracAlgebra& alg,
                                     const Eigen::VectorXd& u, double theta);

// 1D two-spinor Dirac Hamiltonian -ic hbar alpha d/dx + m c^2 beta + V with
// the absorbing boundary condition imposed by projection: H = P H0 P where
// H0 uses a summation-by-parts first derivative. The boundary flux identity
// Im<psi,H psi>_w = -(c hbar/2) sum_b (P psi)_b' (n.alpha) (P psi)_b is
// algebraically exact for every psi.
OperatorMatrix assemble_dirac_1d(std::shared_ptr<const Grid> grid, double mass,
                                 const PotentialField& V, double theta,
                                 const Units& units = {});
// Hermitian-matrix-valued potential variant (one 2x2 block per node).
OperatorMatrix assemble_dirac_1d(std::shared_ptr<const Grid> grid, double mass,
                                 const std::vector<Eigen::Matrix2cd>& V,
                                 double theta, const Units& units = {});

// j_k = c * psi' alpha_k psi for the spinor at one node.
Eigen::VectorXd dirac_current(const DiracAlgebra& alg,
                              Eigen::Ref<const Eigen::VectorXcd> spinor,
                              const Units& units = {});

// Enforce the boundary condition on a spinor field (projects the two
// boundary-node blocks). Initial states should pass through this.
Eigen::VectorXcd project_dirac_boundary(const Grid& grid, double theta,
                                        Eigen::VectorXcd psi);

}  // namespace absorb
