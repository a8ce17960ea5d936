#include <doctest.h>

#include <random>

#include "absorb/dirac.hpp"
#include "test_util.hpp"

using namespace absorb;
using testutil::interval_grid;

namespace {

double anticommutation_residual(const DiracAlgebra& a) {
  const long d = a.spin_dim;
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(d, d);
  double r = 0.0;
  auto acomm = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    return x * y + y * x;
  };
  for (size_t j = 0; j < a.alpha.size(); ++j) {
    for (size_t k = 0; k < a.alpha.size(); ++k) {
      Eigen::MatrixXcd want = (j == k) ? (2.0 * I).eval() : Eigen::MatrixXcd::Zero(d, d).eval();
      r = std::max(r, (acomm(a.alpha[j], a.alpha[k]) - want).cwiseAbs().maxCoeff());
    }
    r = std::max(r, acomm(a.alpha[j], a.beta).cwiseAbs().maxCoeff());
  }
  r = std::max(r, (acomm(a.beta, a.beta) - 2.0 * I).cwiseAbs().maxCoeff());
  for (size_t j = 0; j < a.alpha.size(); ++j)
    r = std::max(r, (a.alpha[j] - a.alpha[j].adjoint()).cwiseAbs().maxCoeff());
  r = std::max(r, (a.beta - a.beta.adjoint()).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace

TEST_CASE("alpha/beta algebra in 2 and 4 dimensions") {
  CHECK(anticommutation_residual(dirac_matrices(2)) < 1e-14);
  CHECK(anticommutation_residual(dirac_matrices(4)) < 1e-14);
  CHECK_THROWS_AS(dirac_matrices(3), std::invalid_argument);
}

TEST_CASE("boundary projector: eigenvalues and outflow bound") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  DiracAlgebra a4 = dirac_matrices(4);

  for (double theta : {0.0, 0.5, -0.5, 2.0}) {
    const double lam = std::sqrt(1.0 + theta * theta);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd u(3);
      for (int k = 0; k < 3; ++k) u[k] = nd(rng);
      u /= u.norm();

      Eigen::MatrixXcd M = theta * a4.beta;
      for (int k = 0; k < 3; ++k) M += u[k] * a4.alpha[k];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
      for (int i = 0; i < 4; ++i)
        CHECK(std::abs(std::abs(es.eigenvalues()[i]) - lam) < 1e-12);

      BoundaryProjector P = boundary_projector(a4, u, theta);
      CHECK((P.P * P.P - P.P).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((P.P - P.P.adjoint()).cwiseAbs().maxCoeff() < 1e-13);

      // outflow bound on random range vectors
      Eigen::MatrixXcd ualpha = Eigen::MatrixXcd::Zero(4, 4);
      for (int k = 0; k < 3; ++k) ualpha += u[k] * a4.alpha[k];
      for (int v = 0; v < 10; ++v) {
        Eigen::VectorXcd raw(4);
        for (int i = 0; i < 4; ++i) raw[i] = cdouble(nd(rng), nd(rng));
        Eigen::VectorXcd psi = P.P * raw;
        double flow = (psi.adjoint() * ualpha * psi).real()(0, 0);
        double bound = (lam - std::abs(theta)) * psi.squaredNorm();
        CHECK(flow >= bound - 1e-12);
      }
    }
  }
  Eigen::VectorXd bad(3);
  bad << 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(boundary_projector(a4, bad, 1.0), std::invalid_argument);
}

TEST_CASE("1D Dirac: dissipativity, contraction, flux balance") {
  auto g = interval_grid(0.0, 10.0, 80);
  OperatorMatrix H = assemble_dirac_1d(g, 1.0, zero_potential(*g), 1.0);
  std::vector<Eigen::VectorXcd> probes;
  for (uint64_t s = 0; s < 40; ++s)
    probes.push_back(testutil::random_state(H.dim(), 13 * s + 1));
  CHECK(dissipativity_defect(H, probes) < 1e-12);

  auto Hp = std::make_shared<OperatorMatrix>(std::move(H));
  CNPropagator prop(Hp, 0.02);
  Eigen::VectorXcd psi(Hp->dim());
  for (long i = 0; i < g->node_count(); ++i) {
    double x = g->position(i)[0];
    cdouble amp = std::exp(cdouble(-(x - 5.0) * (x - 5.0) / 4.0, 2.0 * x));
    psi[2 * i] = amp;
    psi[2 * i + 1] = amp;
  }
  psi = project_dirac_boundary(*g, 1.0, std::move(psi));
  psi /= std::sqrt(wnorm2(g->weights(), psi, 2));

  DetectionDistribution d = record_distribution(prop, psi, 10.0);
  for (long n = 0; n < d.n_steps; ++n) {
    double before = n == 0 ? 1.0 : d.norm2[static_cast<size_t>(n - 1)];
    double after = d.norm2[static_cast<size_t>(n)];
    CHECK(std::sqrt(after) <= std::sqrt(before) * (1.0 + 1e-13));
    double step_mass = 0.0;
    for (double m : d.mass[static_cast<size_t>(n)]) step_mass += m;
    CHECK(std::abs((before - after) - step_mass) < 1e-12);
  }
  CHECK(std::abs(d.total_detected() + d.survivor_mass - 1.0) < 1e-10);
  CHECK(d.total_detected() > 0.1);
}

TEST_CASE("dirac current: zero state, right mover, projector bound") {
  DiracAlgebra a2 = dirac_matrices(2);
  Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(2);
  CHECK(dirac_current(a2, zero).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXcd right(2);
  right << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);  // alpha eigenvector +1
  Eigen::VectorXd j = dirac_current(a2, right);
  CHECK(j[0] == doctest::Approx(1.0).epsilon(1e-13));

  Eigen::VectorXd u(1);
  u << 1.0;
  BoundaryProjector P = boundary_projector(a2, u, 1.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXcd raw(2);
    raw << cdouble(nd(rng), nd(rng)), cdouble(nd(rng), nd(rng));
    Eigen::VectorXcd psi = P.P * raw;
    double flow = dirac_current(a2, psi)[0];
    CHECK(flow >= (std::sqrt(2.0) - 1.0) * psi.squaredNorm() - 1e-12);
  }
}

TEST_CASE("massless right-mover is transported out and absorbed") {
  auto g = interval_grid(0.0, 40.0, 400);
  auto H = std::make_shared<OperatorMatrix>(
      assemble_dirac_1d(g, 0.0, zero_potential(*g), 0.0));
  CNPropagator prop(H, 0.02);
  Eigen::VectorXcd psi(H->dim());
  for (long i = 0; i < g->node_count(); ++i) {
    double x = g->position(i)[0];
    cdouble amp = std::exp(cdouble(-(x - 10.0) * (x - 10.0) / 16.0, 0.0));
    psi[2 * i] = amp / std::sqrt(2.0);
    psi[2 * i + 1] = amp / std::sqrt(2.0);
  }
  psi = project_dirac_boundary(*g, 0.0, std::move(psi));
  psi /= std::sqrt(wnorm2(g->weights(), psi, 2));
  DetectionDistribution d = record_distribution(prop, psi, 60.0);
  CHECK(d.total_detected() > 0.99);
  // essentially everything leaves through the right wall
  auto per_face = d.per_face_totals();
  CHECK(per_face["p0.a0.upper"] > 0.99);
}

TEST_CASE("Hermitian-valued potential validation") {
  auto g = interval_grid(0.0, 1.0, 8);
  std::vector<Eigen::Matrix2cd> V(8, Eigen::Matrix2cd::Identity());
  CHECK_NOTHROW(assemble_dirac_1d(g, 1.0, V, 0.5));
  V[3](0, 1) = cdouble(0.0, 1.0);  // not Hermitian
  CHECK_THROWS_AS(assemble_dirac_1d(g, 1.0, V, 0.5), std::invalid_argument);
}
