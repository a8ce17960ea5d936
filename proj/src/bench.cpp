#include "absorb/bench.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "absorb/detection.hpp"

namespace absorb {

namespace {

Eigen::VectorXcd gaussian_packet(const Grid& g, double center, double sigma,
                                 double k) {
  Eigen::VectorXcd psi(g.node_count());
  const int dim = g.total_dim();
  for (long i = 0; i < g.node_count(); ++i) {
    Eigen::VectorXd x = g.position(i);
    cdouble amp = 1.0;
    for (int a = 0; a < dim; ++a) {
      double d = x[a] - center;
      amp *= std::exp(cdouble(-d * d / (4.0 * sigma * sigma), k * x[a]));
    }
    psi[i] = amp;
  }
  return psi / std::sqrt(wnorm2(g.weights(), psi));
}

std::vector<Eigen::VectorXcd> random_probes(const OperatorMatrix& H, int count,
                                            uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Eigen::VectorXcd> probes;
  for (int p = 0; p < count; ++p) {
    Eigen::VectorXcd v(H.dim());
    for (long i = 0; i < H.dim(); ++i) v[i] = cdouble(nd(rng), nd(rng));
    probes.push_back(std::move(v));
  }
  return probes;
}

struct ResidualSink : FluxSink {
  double contraction = 0.0;
  double flux_balance = 0.0;
  void record(long, const StepFluxRecord& r) override {
    double before = std::sqrt(r.norm2_before), after = std::sqrt(r.norm2_after);
    if (before > 0.0)
      contraction = std::max(contraction, (after - before) / before);
    flux_balance = std::max(
        flux_balance, std::abs((r.norm2_before - r.norm2_after) - r.total));
  }
};

BenchCaseReport run_case(const std::string& name, DomainSpec dom, int nodes,
                         int particles, long steps, double tau, double kappa,
                         double pkt_center, double pkt_sigma, double pkt_k) {
  DomainSpec base_dom = dom;
  base_dom.particle_count = 1;
  if (base_dom.kind == DomainSpec::Kind::Product)
    base_dom.kind = base_dom.dim() == 1 ? DomainSpec::Kind::Interval
                                        : DomainSpec::Kind::Box;
  auto base = std::make_shared<Grid>(Grid::build(base_dom, nodes));
  std::shared_ptr<const Grid> grid =
      particles == 1 ? base
                     : std::make_shared<Grid>(Grid::product(*base, particles));

  BoundaryParams bp;
  bp.kappa = kappa;
  auto H = std::make_shared<OperatorMatrix>(
      assemble_schrodinger(grid, zero_potential(*grid), bp));

  auto t0 = std::chrono::steady_clock::now();
  CNPropagator prop(H, tau);
  Eigen::VectorXcd psi = gaussian_packet(*grid, pkt_center, pkt_sigma, pkt_k);
  ResidualSink sink;
  auto t1 = std::chrono::steady_clock::now();
  prop.evolve(psi, steps, &sink);
  auto t2 = std::chrono::steady_clock::now();

  BenchCaseReport r;
  r.name = name;
  r.n_nodes = grid->node_count();
  r.n_steps = steps;
  r.wall_ms = std::chrono::duration<double, std::milli>(t2 - t0).count();
  r.solve_ms_per_step =
      std::chrono::duration<double, std::milli>(t2 - t1).count() / steps;
  r.residuals.contraction = sink.contraction;
  r.residuals.flux_balance = sink.flux_balance;
  r.residuals.dissipativity = dissipativity_defect(*H, random_probes(*H, 10, 42));

  // POVM completeness companion at dense-feasible size with the same kappa
  DomainSpec small;
  small.kind = DomainSpec::Kind::Interval;
  small.extents = {{0.0, 1.0}};
  auto sg = std::make_shared<Grid>(Grid::build(small, 16));
  auto sh = std::make_shared<OperatorMatrix>(
      assemble_schrodinger(sg, zero_potential(*sg), bp));
  CNPropagator sp(sh, 0.01);
  r.residuals.povm = assemble_J(sp, 0.64).completeness_residual();
  return r;
}

}  // namespace

std::vector<BenchCaseReport> run_bench() {
  std::vector<BenchCaseReport> out;

  DomainSpec d1;
  d1.kind = DomainSpec::Kind::Interval;
  d1.extents = {{0.0, 1024.0}};
  out.push_back(run_case("cn_interval_1024", d1, 1024, 1, 10000, 0.01, 1.0,
                         512.0, 20.0, 1.0));

  DomainSpec d2;
  d2.kind = DomainSpec::Kind::Product;
  d2.extents = {{0.0, 64.0}};
  d2.particle_count = 2;
  out.push_back(
      run_case("two_particle_64", d2, 64, 2, 1000, 0.01, 1.0, 32.0, 4.0, 1.0));

  DomainSpec d3;
  d3.kind = DomainSpec::Kind::Interval;
  d3.extents = {{0.0, 1.0}};
  out.push_back(
      run_case("povm_16_64", d3, 16, 1, 64, 0.01, 1.0, 0.5, 0.15, 3.0));
  return out;
}

nlohmann::ordered_json bench_report_json(const std::vector<BenchCaseReport>& cases) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : cases) {
    nlohmann::ordered_json j;
    j["case"] = c.name;
    j["n_nodes"] = c.n_nodes;
    j["n_steps"] = c.n_steps;
    j["wall_ms"] = c.wall_ms;
    j["solve_ms_per_step"] = c.solve_ms_per_step;
    j["residuals"] = {{"contraction", c.residuals.contraction},
                      {"flux_balance", c.residuals.flux_balance},
                      {"povm", c.residuals.povm},
                      {"dissipativity", c.residuals.dissipativity}};
    arr.push_back(j);
  }
  return arr;
}

}  // namespace absorb
