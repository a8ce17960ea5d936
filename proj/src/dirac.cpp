#include "absorb/dirac.hpp"

#include <cmath>
#include <stdexcept>

namespace absorb {

namespace {
const cdouble I{0.0, 1.0};

Eigen::Matrix2cd pauli(int k) {
  Eigen::Matrix2cd s;
  switch (k) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -I, I, 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}
}  // namespace

DiracAlgebra dirac_matrices(int spin_dim) {
  DiracAlgebra a;
  a.spin_dim = spin_dim;
  if (spin_dim == 2) {
    a.alpha = {pauli(1)};
    a.beta = pauli(3);
  } else if (spin_dim == 4) {
    for (int k = 1; k <= 3; ++k) {
      Eigen::MatrixXcd al = Eigen::MatrixXcd::Zero(4, 4);
      al.block<2, 2>(0, 2) = pauli(k);
      al.block<2, 2>(2, 0) = pauli(k);
      a.alpha.push_back(al);
    }
    a.beta = Eigen::MatrixXcd::Zero(4, 4);
    a.beta.block<2, 2>(0, 0) = Eigen::Matrix2cd::Identity();
    a.beta.block<2, 2>(2, 2) = -Eigen::Matrix2cd::Identity();
  } else {
    throw std::invalid_argument("dirac_matrices supports spin_dim 2 or 4");
  }
  return a;
}

BoundaryProjector boundary_projector(const DiracAlgebra& alg,
                                     const Eigen::VectorXd& u, double theta) {
  if (static_cast<size_t>(u.size()) != alg.alpha.size())
    throw std::invalid_argument("normal vector dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("boundary projector requires a unit normal");

  Eigen::MatrixXcd M = theta * alg.beta;
  for (size_t k = 0; k < alg.alpha.size(); ++k) M += u[k] * alg.alpha[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  const double lam = std::sqrt(1.0 + theta * theta);

  BoundaryProjector p;
  p.u = u;
  p.theta = theta;
  p.P = Eigen::MatrixXcd::Zero(alg.spin_dim, alg.spin_dim);
  for (int i = 0; i < alg.spin_dim; ++i)
    if (es.eigenvalues()[i] > 0.5 * lam)
      p.P += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return p;
}

OperatorMatrix assemble_dirac_1d(std::shared_ptr<const Grid> grid, double mass,
                                 const PotentialField& V, double theta,
                                 const Units& units) {
  std::vector<Eigen::Matrix2cd> vm(grid->node_count());
  if (V.values.size() != grid->node_count())
    throw std::invalid_argument("potential not sampled on this grid");
  for (long i = 0; i < grid->node_count(); ++i)
    vm[i] = V.values[i] * Eigen::Matrix2cd::Identity();
  return assemble_dirac_1d(std::move(grid), mass, vm, theta, units);
}

OperatorMatrix assemble_dirac_1d(std::shared_ptr<const Grid> grid, double mass,
                                 const std::vector<Eigen::Matrix2cd>& V,
                                 double theta, const Units& units) {
  if (grid->total_dim() != 1 || grid->particle_count() != 1)
    throw std::invalid_argument("the evolved Dirac model is one-dimensional");
  const long n = grid->node_count();
  if (static_cast<long>(V.size()) != n)
    throw std::invalid_argument("potential not sampled on this grid");
  for (const auto& v : V)
    if (!v.isApprox(v.adjoint(), 1e-12))
      throw std::invalid_argument("Dirac potential must be Hermitian-valued");

  DiracAlgebra alg = dirac_matrices(2);
  const Eigen::Matrix2cd al = alg.alpha[0];
  const Eigen::Matrix2cd be = alg.beta;
  const double h = grid->spacing(0);
  const double ch = units.c * units.hbar;

  // H0 block rows: -ic*hbar * D (x) alpha + mc^2 beta + V, where D is the
  // second-order SBP derivative (centered interior, one-sided closure).
  auto d_row = [&](long i) {
    std::vector<std::pair<long, double>> r;
    if (i == 0)
      r = {{0, -1.0 / h}, {1, 1.0 / h}};
    else if (i == n - 1)
      r = {{n - 2, -1.0 / h}, {n - 1, 1.0 / h}};
    else
      r = {{i - 1, -0.5 / h}, {i + 1, 0.5 / h}};
    return r;
  };

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(1);
  e1[0] = -1.0;
  BoundaryProjector pl = boundary_projector(alg, e1, theta);
  e1[0] = 1.0;
  BoundaryProjector pr = boundary_projector(alg, e1, theta);
  auto proj = [&](long i) -> Eigen::Matrix2cd {
    if (i == 0) return pl.P;
    if (i == n - 1) return pr.P;
    return Eigen::Matrix2cd::Identity();
  };

  std::vector<Eigen::Triplet<cdouble>> trips;
  for (long i = 0; i < n; ++i) {
    Eigen::Matrix2cd Pi = proj(i);
    for (auto [j, d] : d_row(i)) {
      Eigen::Matrix2cd blk = Pi * (-I * ch * d * al) * proj(j);
      if (i == j) blk += Pi * (mass * units.c * units.c * be + V[i]) * Pi;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          if (blk(r, c) != cdouble(0.0)) trips.emplace_back(2 * i + r, 2 * j + c, blk(r, c));
    }
    if (d_row(i).size() == 2 && i != 0 && i != n - 1) {
      // centered rows have no diagonal from D; add the mass/potential block
      Eigen::Matrix2cd blk = Pi * (mass * units.c * units.c * be + V[i]) * Pi;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          if (blk(r, c) != cdouble(0.0)) trips.emplace_back(2 * i + r, 2 * i + c, blk(r, c));
    }
  }

  OperatorMatrix H;
  H.grid = std::move(grid);
  H.components = 2;
  H.units = units;
  H.mat.resize(2 * n, 2 * n);
  H.mat.setFromTriplets(trips.begin(), trips.end());
  H.init_dof_weights();

  // Flux: outflow density at a boundary node is c * w_b * (P psi)' (n.alpha) (P psi),
  // a PSD form on the whole spin space; store a square-root factor.
  for (const BoundaryEntry& e : H.grid->boundary()) {
    const bool left = e.face.side == Side::Lower;
    const Eigen::Matrix2cd& P = left ? pl.P : pr.P;
    Eigen::Matrix2cd M = units.c * e.surface_weight * P * (left ? (-al).eval() : al) * P;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(M);
    std::vector<Eigen::RowVector2cd> rows;
    for (int k = 0; k < 2; ++k)
      if (es.eigenvalues()[k] > 1e-14)
        rows.push_back(std::sqrt(es.eigenvalues()[k]) *
                       es.eigenvectors().col(k).adjoint());
    Eigen::MatrixXcd F(rows.size(), 2);
    for (size_t k = 0; k < rows.size(); ++k) F.row(k) = rows[k];
    if (F.rows() > 0) H.flux.push_back({e.node, e.face, std::move(F)});
  }
  return H;
}

Eigen::VectorXd dirac_current(const DiracAlgebra& alg,
                              Eigen::Ref<const Eigen::VectorXcd> spinor,
                              const Units& units) {
  Eigen::VectorXd j(alg.alpha.size());
  for (size_t k = 0; k < alg.alpha.size(); ++k)
    j[k] = units.c * (spinor.adjoint() * alg.alpha[k] * spinor).real()(0, 0);
  return j;
}

Eigen::VectorXcd project_dirac_boundary(const Grid& grid, double theta,
                                        Eigen::VectorXcd psi) {
  DiracAlgebra alg = dirac_matrices(2);
  Eigen::VectorXd u(1);
  u[0] = -1.0;
  Eigen::Matrix2cd pl = boundary_projector(alg, u, theta).P;
  u[0] = 1.0;
  Eigen::Matrix2cd pr = boundary_projector(alg, u, theta).P;
  const long n = grid.node_count();
  psi.segment(0, 2) = pl * psi.segment(0, 2);
  psi.segment(2 * (n - 1), 2) = pr * psi.segment(2 * (n - 1), 2);
  return psi;
}

}  // namespace absorb
