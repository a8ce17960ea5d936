#include <doctest.h>

#include "test_util.hpp"

using namespace absorb;
using testutil::gaussian_packet;
using testutil::interval_grid;
using testutil::interval_op;

TEST_CASE("record_distribution: probability budget and kappa = 0 limit") {
  auto H = interval_op(0.0, 10.0, 64, 1.0);
  CNPropagator prop(H, 0.05);
  Eigen::VectorXcd psi = gaussian_packet(*H->grid, 5.0, 1.2, 1.0);
  DetectionDistribution d = record_distribution(prop, psi, 5.0);
  CHECK(d.n_steps == 100);
  double total = d.total_detected();
  CHECK(total > 0.1);
  CHECK(std::abs(total + d.survivor_mass - 1.0) < 1e-10);
  for (const auto& step : d.mass)
    for (double m : step) CHECK(m >= 0.0);
  double facesum = 0.0;
  for (const auto& [f, m] : d.per_face_totals()) facesum += m;
  CHECK(facesum == doctest::Approx(total).epsilon(1e-12));

  auto H0 = interval_op(0.0, 10.0, 64, 0.0);
  CNPropagator prop0(H0, 0.05);
  DetectionDistribution d0 = record_distribution(prop0, psi, 5.0);
  CHECK(d0.total_detected() <= 1e-12);
  CHECK(d0.survivor_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("record_distribution rejects unnormalized input") {
  auto H = interval_op(0.0, 1.0, 16, 1.0);
  CNPropagator prop(H, 0.01);
  Eigen::VectorXcd psi = 2.0 * testutil::random_normalized(*H, 3);
  CHECK_THROWS_AS(record_distribution(prop, psi, 0.1), std::invalid_argument);
}

TEST_CASE("sampler: determinism, kappa = 0, and chi-squared consistency") {
  auto H = interval_op(0.0, 1.0, 8, 1.0);
  CNPropagator prop(H, 0.01);
  Eigen::VectorXcd psi = gaussian_packet(*H->grid, 0.5, 0.15, 3.0);
  const double t_max = 0.32;

  // determinism: identical seed gives an identical outcome (detection or not)
  bool saw_event = false;
  for (uint64_t seed = 40; seed < 60; ++seed) {
    auto e1 = sample_detection(prop, psi, t_max, seed);
    auto e2 = sample_detection(prop, psi, t_max, seed);
    REQUIRE(e1.has_value() == e2.has_value());
    if (e1) {
      saw_event = true;
      CHECK(e1->step == e2->step);
      CHECK(e1->flux_entry == e2->flux_entry);
    }
  }
  CHECK(saw_event);

  auto H0 = interval_op(0.0, 1.0, 8, 0.0);
  CNPropagator prop0(H0, 0.01);
  CHECK(!sample_detection(prop0, psi, t_max, 1).has_value());

  // histogram vs exact distribution
  DetectionDistribution d = record_distribution(prop, psi, t_max);
  const long entries = static_cast<long>(H->flux.size());
  std::vector<double> expected;
  for (long n = 0; n < d.n_steps; ++n)
    for (long b = 0; b < entries; ++b)
      expected.push_back(d.mass[static_cast<size_t>(n)][static_cast<size_t>(b)]);
  expected.push_back(d.survivor_mass);

  const int samples = 20000;
  std::vector<double> observed(expected.size(), 0.0);
  for (int s = 0; s < samples; ++s) {
    auto ev = sample_detection(prop, psi, t_max, 1000 + static_cast<uint64_t>(s));
    if (ev)
      observed[static_cast<size_t>(ev->step * entries + ev->flux_entry)] += 1.0;
    else
      observed.back() += 1.0;
  }
  CHECK(testutil::chi2_pvalue(observed, expected, samples) > 0.001);
}

TEST_CASE("collapse of a product state gives the other factor") {
  auto base = interval_grid(0.0, 1.0, 5);
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  Eigen::VectorXcd phi = testutil::random_state(5, 1);
  Eigen::VectorXcd chi = testutil::random_state(5, 2);
  Eigen::VectorXcd psi(25);
  for (long b = 0; b < 5; ++b)
    for (long a = 0; a < 5; ++a)
      psi[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          phi[a] * chi[b];

  auto [out, nf] = collapse(*g2, psi, 0, 0);
  Eigen::VectorXcd want = chi / std::sqrt(wnorm2(base->weights(), chi));
  // equality up to a global phase
  cdouble ov = wdot(base->weights(), want, out);
  CHECK(std::abs(std::abs(ov) - 1.0) < 1e-12);
  CHECK(wnorm2(base->weights(), out) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nf > 0.0);

  // scaling psi leaves the collapsed ray unchanged
  auto [out2, nf2] = collapse(*g2, (3.7 * psi).eval(), 0, 0);
  CHECK(std::abs(std::abs(wdot(base->weights(), out, out2)) - 1.0) < 1e-12);

  Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(25);
  CHECK_THROWS_AS(collapse(*g2, zero, 0, 0), InvariantError);
}

TEST_CASE("antisymmetric collapse: both particle choices give the same ray") {
  auto base = interval_grid(0.0, 1.0, 5);
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  Eigen::VectorXcd phi = testutil::random_state(5, 11);
  Eigen::VectorXcd chi = testutil::random_state(5, 12);
  Eigen::VectorXcd psi(25);
  for (long b = 0; b < 5; ++b)
    for (long a = 0; a < 5; ++a)
      psi[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          phi[a] * chi[b] - chi[a] * phi[b];

  auto [c1, n1] = collapse(*g2, psi, 0, 4);
  auto [c2, n2] = collapse(*g2, psi, 1, 4);
  cdouble ov = wdot(base->weights(), c1, c2);
  CHECK(std::abs(std::abs(ov) - 1.0) < 1e-12);
  CHECK(std::abs(ov + 1.0) < 1e-12);  // opposite sign, same ray
}

TEST_CASE("cascade: N = 1 reduces to sample_detection; kappa = 0 never fires") {
  auto base = interval_grid(0.0, 1.0, 8);
  BoundaryParams bp;
  bp.kappa = 1.0;
  CascadeModel m1 = make_cascade_model(base, 1, {zero_potential(*base)}, bp, {}, 0.01);
  Eigen::VectorXcd psi = gaussian_packet(*base, 0.5, 0.15, 3.0);
  CascadeResult r = cascade_run(m1, psi, 0.32, 77);
  auto ev = sample_detection(*m1.stages[0].prop, psi, 0.32, 77);
  REQUIRE(!r.events.empty());
  REQUIRE(ev.has_value());
  CHECK(r.events[0].step == ev->step);
  CHECK(r.events[0].time == ev->time);

  BoundaryParams bp0;
  bp0.kappa = 0.0;
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  CascadeModel m0 = make_cascade_model(
      base, 2, {zero_potential(*g2), zero_potential(*base)}, bp0, {}, 0.01);
  Eigen::VectorXcd psi2(64);
  for (long b = 0; b < 8; ++b)
    for (long a = 0; a < 8; ++a)
      psi2[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          psi[a] * psi[b];
  psi2 /= std::sqrt(wnorm2(g2->weights(), psi2));
  CascadeResult r0 = cascade_run(m0, psi2, 0.32, 5);
  CHECK(r0.events.empty());
  CHECK(r0.truncated);
}

TEST_CASE("joint table: total mass, marginal law, factorized product state") {
  auto base = interval_grid(0.0, 1.0, 6);
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  BoundaryParams bp;
  bp.kappa = 1.0;
  CascadeModel model = make_cascade_model(
      base, 2, {zero_potential(*g2), zero_potential(*base)}, bp, {}, 0.01);
  Eigen::VectorXcd phi = gaussian_packet(*base, 0.5, 0.15, 3.0);
  Eigen::VectorXcd psi(36);
  for (long b = 0; b < 6; ++b)
    for (long a = 0; a < 6; ++a)
      psi[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          phi[a] * phi[b];
  psi /= std::sqrt(wnorm2(g2->weights(), psi));

  JointTable t = joint_distribution_2particle(model, psi, 0.4);
  CHECK(std::abs(t.total_mass() - 1.0) < 1e-8);

  std::vector<double> marg = t.first_marginal();
  for (size_t i = 0; i < marg.size(); ++i)
    CHECK(std::abs(marg[i] - t.first_law[i]) < 1e-10);

  // product state: the conditional second law is independent of the first
  // event's location (same particle, same first step)
  for (long n1 = 0; n1 + 1 < t.n_steps; ++n1) {
    long i_a = -1, i_b = -1;
    for (long i = 0; i < t.c1(); ++i) {
      if (t.cells1[static_cast<size_t>(i)].particle != 0) continue;
      (i_a < 0 ? i_a : i_b) = i;
    }
    REQUIRE(i_a >= 0);
    REQUIRE(i_b >= 0);
    double wa = t.first_law[static_cast<size_t>(n1 * t.c1() + i_a)];
    double wb = t.first_law[static_cast<size_t>(n1 * t.c1() + i_b)];
    if (wa < 1e-12 || wb < 1e-12) continue;
    // the CN step of a sum Hamiltonian does not factorize exactly, so the
    // evolved state is a product only up to O(tau^2); compare loosely
    for (long g = n1 + 1; g < t.n_steps; ++g)
      for (long i2 = 0; i2 < t.c2(); ++i2) {
        double ca = t.at(n1, i_a, g, i2) / wa;
        double cb = t.at(n1, i_b, g, i2) / wb;
        CHECK(std::abs(ca - cb) < 1e-2);
      }
  }
}

TEST_CASE("monte carlo cascade matches the exhaustive joint first-event law") {
  auto base = interval_grid(0.0, 1.0, 6);
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  BoundaryParams bp;
  bp.kappa = 1.0;
  CascadeModel model = make_cascade_model(
      base, 2, {zero_potential(*g2), zero_potential(*base)}, bp, {}, 0.01);
  Eigen::VectorXcd phi = gaussian_packet(*base, 0.5, 0.15, 3.0);
  Eigen::VectorXcd psi(36);
  for (long b = 0; b < 6; ++b)
    for (long a = 0; a < 6; ++a)
      psi[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          phi[a] * phi[b];
  psi /= std::sqrt(wnorm2(g2->weights(), psi));
  const double t_max = 0.4;
  JointTable t = joint_distribution_2particle(model, psi, t_max);

  std::vector<double> expected = t.first_marginal();
  expected.push_back(t.first_truncation);
  std::vector<double> observed(expected.size(), 0.0);
  const int samples = 4000;
  for (int s = 0; s < samples; ++s) {
    CascadeResult r = cascade_run(model, psi, t_max, 900 + static_cast<uint64_t>(s));
    if (r.events.empty()) {
      observed.back() += 1.0;
      continue;
    }
    const CascadeEvent& e = r.events[0];
    for (long i = 0; i < t.c1(); ++i) {
      const EventCell& c = t.cells1[static_cast<size_t>(i)];
      long node = model.stages[0].H->flux.empty() ? -1 : 0;
      (void)node;
      if (c.particle == e.particle && c.base_node == e.base_node) {
        observed[static_cast<size_t>(e.step * t.c1() + i)] += 1.0;
        break;
      }
    }
  }
  CHECK(testutil::chi2_pvalue(observed, expected, samples) > 0.001);
}

TEST_CASE("collapse superoperator: product action, trace formula, Choi PSD") {
  auto base = interval_grid(0.0, 1.0, 4);
  auto g2 = std::make_shared<Grid>(Grid::product(*base, 2));
  BoundaryParams bp;
  bp.kappa = 1.0;
  Units units;

  Eigen::VectorXcd phi = testutil::random_state(4, 21);
  Eigen::VectorXcd chi = testutil::random_state(4, 22);
  Eigen::VectorXcd psi(16);
  for (long b = 0; b < 4; ++b)
    for (long a = 0; a < 4; ++a)
      psi[g2->flatten({static_cast<int>(a), static_cast<int>(b)})] =
          phi[a] * chi[b];
  Eigen::MatrixXcd rho = psi * psi.adjoint();

  Eigen::MatrixXcd out = collapse_superoperator_apply(*g2, bp, units, 0, rho);
  double s = 0.0;
  for (const auto& e : base->boundary())
    s += e.surface_weight * std::norm(phi[e.node]);
  s *= units.hbar * bp.kappa / units.m;
  Eigen::MatrixXcd want = s * (chi * chi.adjoint());
  CHECK((out - want).cwiseAbs().maxCoeff() < 1e-12 * want.cwiseAbs().maxCoeff());

  // trace formula against the particle-0 marginal
  Eigen::MatrixXcd rho1 = Eigen::MatrixXcd::Zero(4, 4);
  for (long a = 0; a < 4; ++a)
    for (long ap = 0; ap < 4; ++ap)
      for (long b = 0; b < 4; ++b)
        rho1(a, ap) += base->weights()[b] *
                       rho(g2->flatten({static_cast<int>(a), static_cast<int>(b)}),
                           g2->flatten({static_cast<int>(ap), static_cast<int>(b)}));
  double tr_out = 0.0;
  for (long b = 0; b < 4; ++b)
    for (long bp2 = 0; bp2 < 4; ++bp2)
      if (b == bp2) tr_out += (base->weights()[b] * out(b, b)).real();
  double tr_formula = 0.0;
  for (const auto& e : base->boundary())
    tr_formula += e.surface_weight * rho1(e.node, e.node).real();
  tr_formula *= units.hbar * bp.kappa / units.m;
  CHECK(tr_out == doctest::Approx(tr_formula).epsilon(1e-10));

  Eigen::MatrixXcd choi = collapse_superoperator_choi(*g2, bp, units, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(choi);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("spectrum report: Hermitian case and absorbing case") {
  auto H0 = interval_op(0.0, 10.0, 64, 0.0);
  SpectrumReport r0 = spectrum_report(*H0);
  CHECK(r0.max_im <= 1e-10);
  CHECK(r0.eigenvalues.imag().cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(r0.max_offdiag_gram < 1e-10);

  auto H1 = interval_op(0.0, 10.0, 64, 1.0);
  SpectrumReport r1 = spectrum_report(*H1);
  CHECK(r1.max_im <= 1e-10);
  CHECK(r1.eigenvalues.imag().minCoeff() < -1e-6);
  CHECK(r1.max_offdiag_gram > 1e-3);
  CHECK(r1.normality > 0.0);

  // adjoint spectrum is the conjugate
  SpectrumReport ra = spectrum_report(weighted_adjoint(*H1));
  Eigen::VectorXd a = r1.eigenvalues.real();
  Eigen::VectorXd b = ra.eigenvalues.real();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((r1.eigenvalues.imag() + ra.eigenvalues.imag()).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("distribution granularity: masses are additive under merging") {
  auto H = interval_op(0.0, 10.0, 32, 1.0);
  CNPropagator prop(H, 0.05);
  Eigen::VectorXcd psi = gaussian_packet(*H->grid, 5.0, 1.0, 1.0);
  DetectionDistribution d = record_distribution(prop, psi, 2.0);
  // merging all bins reproduces 1 - survivor exactly
  double all = 0.0;
  for (const auto& step : d.mass)
    for (double m : step) all += m;
  CHECK(std::abs(all - d.total_detected()) < 1e-14);
  CHECK(std::abs(all + d.survivor_mass - 1.0) < 1e-10);
}
