#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "absorb/operator.hpp"

namespace absorb {

// Per-face override of the boundary constants; applies to the given
// per-particle axis/side for every particle.
struct FaceBoundaryOverride {
  int axis = 0;
  Side side = Side::Lower;
  double kappa = 0.0;
  double nu = 0.0;
};

struct BoundaryParams {
  double kappa = 0.0;
  double nu = 0.0;
  bool allow_emitting = false;
  std::vector<FaceBoundaryOverride> overrides;

  // (kappa, nu) effective on a face.
  std::pair<double, double> at(const FaceId& f) const;
  void validate() const;  // rejects kappa < 0 unless allow_emitting
};

struct PotentialField {
  Eigen::VectorXd values;  // energy per node
};

PotentialField zero_potential(const Grid& g);

// Discrete H = -(hbar^2/2m) Laplacian + V with the absorbing boundary
// condition d(psi)/dn = (nu + i kappa) psi folded into the boundary rows by
// centered ghost-node elimination. With trapezoidal weights the discrete
// flux identity Im<psi,H psi>_w = -(hbar^2 kappa/2m) sum_b w_b |psi_b|^2 is
// algebraically exact.
OperatorMatrix assemble_schrodinger(std::shared_ptr<const Grid> grid,
                                    const PotentialField& V,
                                    const BoundaryParams& bp,
                                    const Units& units = {});

}  // namespace absorb
