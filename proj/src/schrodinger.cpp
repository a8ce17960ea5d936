#include "absorb/schrodinger.hpp"

#include <cmath>
#include <stdexcept>

namespace absorb {

std::pair<double, double> BoundaryParams::at(const FaceId& f) const {
  for (const auto& o : overrides)
    if (o.axis == f.axis && o.side == f.side) return {o.kappa, o.nu};
  return {kappa, nu};
}

void BoundaryParams::validate() const {
  auto check = [&](double k) {
    if (k < 0.0 && !allow_emitting)
      throw std::invalid_argument(
          "kappa < 0 is emitting, not absorbing; well-posedness is an open "
          "question (pass allow_emitting to force)");
  };
  check(kappa);
  for (const auto& o : overrides) check(o.kappa);
}

PotentialField zero_potential(const Grid& g) {
  return {Eigen::VectorXd::Zero(g.node_count())};
}

OperatorMatrix assemble_schrodinger(std::shared_ptr<const Grid> grid,
                                    const PotentialField& V,
                                    const BoundaryParams& bp,
                                    const Units& units) {
  bp.validate();
  if (V.values.size() != grid->node_count())
    throw std::invalid_argument("potential not sampled on this grid");
  if (!V.values.allFinite())
    throw std::invalid_argument("potential contains non-finite values");

  const long n = grid->node_count();
  const int D = grid->total_dim();
  const double pref = units.hbar * units.hbar / (2.0 * units.m);

  std::vector<Eigen::Triplet<cdouble>> trips;
  trips.reserve(n * (2 * D + 1));

  for (long i = 0; i < n; ++i) {
    auto idx = grid->unflatten(i);
    cdouble diag = V.values[i];
    for (int a = 0; a < D; ++a) {
      const double h = grid->spacing(a);
      const double t = pref / (h * h);
      const bool lower = idx[a] == 0;
      const bool upper = idx[a] == grid->axis_nodes(a) - 1;
      diag += 2.0 * t;
      if (lower || upper) {
        // Ghost elimination: psi_ghost = psi_inner + 2h(nu+i kappa) psi_b.
        FaceId f{a / grid->per_particle_dim(), a % grid->per_particle_dim(),
                 lower ? Side::Lower : Side::Upper};
        auto [kap, nu] = bp.at(f);
        diag += -2.0 * t * h * cdouble(nu, kap);
        auto jdx = idx;
        jdx[a] += lower ? 1 : -1;
        trips.emplace_back(i, grid->flatten(jdx), cdouble(-2.0 * t));
      } else {
        auto jdx = idx;
        jdx[a] -= 1;
        trips.emplace_back(i, grid->flatten(jdx), cdouble(-t));
        jdx[a] += 2;
        trips.emplace_back(i, grid->flatten(jdx), cdouble(-t));
      }
    }
    trips.emplace_back(i, i, diag);
  }

  OperatorMatrix H;
  H.grid = std::move(grid);
  H.components = 1;
  H.units = units;
  H.mat.resize(n, n);
  H.mat.setFromTriplets(trips.begin(), trips.end());
  H.init_dof_weights();

  for (const BoundaryEntry& e : H.grid->boundary()) {
    auto [kap, nu] = bp.at(e.face);
    if (kap <= 0.0) continue;  // reflecting (or emitting) faces carry no outflow
    double c = units.hbar * kap / units.m * e.surface_weight;
    Eigen::MatrixXcd f(1, 1);
    f(0, 0) = std::sqrt(c);
    H.flux.push_back({e.node, e.face, std::move(f)});
  }
  return H;
}

}  // namespace absorb
