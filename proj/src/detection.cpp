#include "absorb/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace absorb {

namespace {

struct CollectSink : FluxSink {
  DetectionDistribution* d;
  explicit CollectSink(DetectionDistribution* dd) : d(dd) {}
  void record(long, const StepFluxRecord& r) override {
    d->mass.push_back(r.mass);
    d->norm2.push_back(r.norm2_after);
  }
};

long steps_for(double t_max, double tau) {
  if (t_max <= 0.0) throw std::invalid_argument("t_max must be positive");
  long n = std::llround(t_max / tau);
  return std::max<long>(n, 1);
}

}  // namespace

double DetectionDistribution::total_detected() const {
  double s = 0.0;
  for (const auto& row : mass) s = std::accumulate(row.begin(), row.end(), s);
  return s;
}

std::map<std::string, double> DetectionDistribution::per_face_totals() const {
  std::map<std::string, double> out;
  for (const auto& row : mass)
    for (size_t e = 0; e < row.size(); ++e)
      out[face_label(op->flux[e].face)] += row[e];
  return out;
}

DetectionDistribution record_distribution(const CNPropagator& prop,
                                          const Eigen::VectorXcd& psi0,
                                          double t_max) {
  const OperatorMatrix& H = prop.op();
  double n2 = wnorm2(H.grid->weights(), psi0, H.components);
  if (std::abs(n2 - 1.0) > 1e-10)
    throw std::invalid_argument("record_distribution: psi0 must be normalized");

  DetectionDistribution d;
  d.tau = prop.tau();
  d.n_steps = steps_for(t_max, prop.tau());
  d.op = prop.op_ptr();
  CollectSink sink(&d);
  Eigen::VectorXcd psi = prop.evolve(psi0, d.n_steps, &sink);
  d.survivor_mass = wnorm2(H.grid->weights(), psi, H.components);
  return d;
}

Eigen::MatrixXcd DiscretePOVM::E_inf() const {
  long n = J.cols();
  Eigen::MatrixXcd JJ = J.adjoint() * J;
  for (long i = 0; i < n; ++i) JJ.row(i) /= dof_weights[i];
  return Eigen::MatrixXcd::Identity(n, n) - JJ;
}

namespace {
// Similarity transform to the weighted-orthonormal frame, where adjoints
// are plain conjugate transposes.
Eigen::MatrixXcd sym_JJ(const DiscretePOVM& p) {
  Eigen::MatrixXcd Jt = p.J;
  for (long i = 0; i < Jt.cols(); ++i) Jt.col(i) /= std::sqrt(p.dof_weights[i]);
  return Jt.adjoint() * Jt;
}
Eigen::MatrixXcd sym_WW(const DiscretePOVM& p) {
  Eigen::MatrixXcd Wt = p.W_T;
  for (long i = 0; i < Wt.rows(); ++i) Wt.row(i) *= std::sqrt(p.dof_weights[i]);
  for (long i = 0; i < Wt.cols(); ++i) Wt.col(i) /= std::sqrt(p.dof_weights[i]);
  return Wt.adjoint() * Wt;
}
}  // namespace

double DiscretePOVM::completeness_residual() const {
  long n = J.cols();
  return (sym_JJ(*this) + sym_WW(*this) - Eigen::MatrixXcd::Identity(n, n)).norm();
}

double DiscretePOVM::min_eig_E_inf() const {
  long n = J.cols();
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(n, n) - sym_JJ(*this);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (E + E.adjoint()));
  return es.eigenvalues().minCoeff();
}

double DiscretePOVM::e_inf_vs_wtw() const {
  long n = J.cols();
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(n, n) - sym_JJ(*this);
  return (E - sym_WW(*this)).norm();
}

DiscretePOVM assemble_J(const CNPropagator& prop, double t_max) {
  const OperatorMatrix& H = prop.op();
  const long dim = H.dim();
  if (dim > 2048)
    throw SizeGuardError("assemble_J requires dense-feasible dimension (<= 2048)");

  DiscretePOVM p;
  p.n_steps = steps_for(t_max, prop.tau());
  p.rows_per_step = 0;
  for (const FluxTerm& t : H.flux) p.rows_per_step += t.factor.rows();
  p.dof_weights = H.dof_weights;
  p.J.setZero(p.n_steps * p.rows_per_step, dim);
  p.W_T.setZero(dim, dim);

  const double sq_tau = std::sqrt(prop.tau());
  const int nc = H.components;
  for (long j = 0; j < dim; ++j) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi[j] = 1.0;
    for (long s = 0; s < p.n_steps; ++s) {
      auto [next, rec] = prop.step(psi);
      Eigen::VectorXcd mid = 0.5 * (psi + next);
      long row = s * p.rows_per_step;
      for (const FluxTerm& t : H.flux) {
        p.J.block(row, j, t.factor.rows(), 1) =
            sq_tau * (t.factor * mid.segment(t.node * nc, nc));
        row += t.factor.rows();
      }
      psi = std::move(next);
    }
    p.W_T.col(j) = psi;
  }
  return p;
}

std::optional<DetectionEvent> sample_detection(const CNPropagator& prop,
                                               const Eigen::VectorXcd& psi0,
                                               double t_max, uint64_t seed) {
  const OperatorMatrix& H = prop.op();
  long n_steps = steps_for(t_max, prop.tau());
  std::mt19937_64 rng(seed);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  double cum = 0.0;
  Eigen::VectorXcd psi = psi0;
  for (long s = 0; s < n_steps; ++s) {
    auto [next, rec] = prop.step(psi);
    for (size_t e = 0; e < rec.mass.size(); ++e) {
      cum += rec.mass[e];
      if (cum > u) {
        const FluxTerm& t = H.flux[e];
        return DetectionEvent{s, (s + 0.5) * prop.tau(), t.node, t.face,
                              static_cast<long>(e)};
      }
    }
    psi = std::move(next);
  }
  return std::nullopt;
}

Eigen::VectorXcd slice_particle(const Grid& g, const Eigen::VectorXcd& psi,
                                int particle, long base_node) {
  auto base = g.base_ptr();
  if (!base || g.particle_count() < 2)
    throw std::invalid_argument("slice requires a multi-particle product grid");
  const int N = g.particle_count();
  const long nb = base->node_count();
  long out_dim = 1;
  for (int p = 0; p < N - 1; ++p) out_dim *= nb;

  Eigen::VectorXcd out(out_dim);
  for (long o = 0; o < out_dim; ++o) {
    long full = 0, stride = 1, rest = o;
    for (int p = 0; p < N; ++p) {
      long b = (p == particle) ? base_node : rest % nb;
      if (p != particle) rest /= nb;
      full += b * stride;
      stride *= nb;
    }
    out[o] = psi[full];
  }
  return out;
}

std::pair<Eigen::VectorXcd, double> collapse(const Grid& g,
                                             const Eigen::VectorXcd& psi,
                                             int particle, long base_node) {
  Eigen::VectorXcd s = slice_particle(g, psi, particle, base_node);
  auto base = g.base_ptr();
  const long nb = base->node_count();
  double n2 = 0.0;
  for (long o = 0; o < s.size(); ++o) {
    double w = 1.0;
    long rest = o;
    for (int p = 0; p < g.particle_count() - 1; ++p) {
      w *= base->weights()[rest % nb];
      rest /= nb;
    }
    n2 += w * std::norm(s[o]);
  }
  if (n2 <= 0.0) throw InvariantError("collapse onto null slice");
  double nf = 1.0 / std::sqrt(n2);
  return {nf * s, nf};
}

std::vector<EventCell> event_cells(const Grid& g) {
  std::set<long> nodes;
  const Grid& b = g.base_ptr() ? *g.base_ptr() : g;
  for (const BoundaryEntry& e : b.boundary()) nodes.insert(e.node);
  std::vector<EventCell> cells;
  for (int p = 0; p < g.particle_count(); ++p)
    for (long n : nodes) cells.push_back({p, n});
  return cells;
}

std::vector<int> entry_to_cell(const OperatorMatrix& H) {
  const Grid& g = *H.grid;
  const Grid& b = g.base_ptr() ? *g.base_ptr() : g;
  auto cells = event_cells(g);
  std::vector<int> out;
  out.reserve(H.flux.size());
  for (const FluxTerm& t : H.flux) {
    auto idx = g.unflatten(t.node);
    std::vector<int> bidx(idx.begin() + t.face.particle * g.per_particle_dim(),
                          idx.begin() + (t.face.particle + 1) * g.per_particle_dim());
    EventCell c{t.face.particle, b.flatten(bidx)};
    auto it = std::find(cells.begin(), cells.end(), c);
    out.push_back(static_cast<int>(it - cells.begin()));
  }
  return out;
}

CascadeModel make_cascade_model(std::shared_ptr<const Grid> base, int n_particles,
                                const std::vector<PotentialField>& potentials,
                                const BoundaryParams& bp, const Units& units,
                                double tau) {
  if (static_cast<int>(potentials.size()) != n_particles)
    throw std::invalid_argument("cascade needs one potential per stage");
  CascadeModel m;
  m.base = base;
  for (int k = n_particles; k >= 1; --k) {
    CascadeStage st;
    st.grid = std::make_shared<Grid>(Grid::product(*base, k));
    st.H = std::make_shared<OperatorMatrix>(
        assemble_schrodinger(st.grid, potentials[n_particles - k], bp, units));
    st.prop = std::make_shared<CNPropagator>(st.H, tau);
    m.stages.push_back(std::move(st));
  }
  return m;
}

CascadeResult cascade_run(const CascadeModel& model, const Eigen::VectorXcd& psi0,
                          double t_max, uint64_t seed) {
  const double tau = model.stages[0].prop->tau();
  const long n_steps = steps_for(t_max, tau);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CascadeResult res;
  std::vector<int> orig(model.particles());
  std::iota(orig.begin(), orig.end(), 0);

  Eigen::VectorXcd psi = psi0;
  long offset = 0;
  for (int stage = 0; stage < model.particles(); ++stage) {
    const CascadeStage& st = model.stages[stage];
    const OperatorMatrix& H = *st.H;
    auto e2c = entry_to_cell(H);
    auto cells = event_cells(*st.grid);
    double u = unif(rng);
    double cum = 0.0;
    bool detected = false;
    for (long s = offset; s < n_steps && !detected; ++s) {
      auto [next, rec] = st.prop->step(psi);
      for (size_t e = 0; e < rec.mass.size() && !detected; ++e) {
        cum += rec.mass[e];
        if (cum > u) {
          const EventCell& c = cells[e2c[e]];
          res.events.push_back({(s + 0.5) * tau, s, orig[c.particle],
                                c.base_node, H.flux[e].face});
          if (stage + 1 < model.particles()) {
            Eigen::VectorXcd mid = 0.5 * (psi + next);
            auto [collapsed, nf] = collapse(*st.grid, mid, c.particle, c.base_node);
            psi = std::move(collapsed);
            res.norm_factors.push_back(nf);
            orig.erase(orig.begin() + c.particle);
          }
          offset = s + 1;
          detected = true;
        }
      }
      if (!detected) psi = std::move(next);
    }
    if (!detected) {
      res.truncated = true;
      res.survivor_mass = wnorm2(st.grid->weights(), psi, H.components);
      return res;
    }
    if (offset >= n_steps && stage + 1 < model.particles()) {
      // event landed in the final step; no horizon left for later stages
      res.truncated = true;
      res.survivor_mass = 1.0;  // collapsed state is normalized
      return res;
    }
  }
  res.survivor_mass = 0.0;
  return res;
}

namespace {
// tau * sum over base faces at X of (hbar*kappa_f/m) * surface weight;
// the exact per-step mass of the cell is this times ||slice||_w^2.
double cell_scale(const Grid& base, const BoundaryParams& bp, const Units& units,
                  double tau, long base_node) {
  double s = 0.0;
  for (const BoundaryEntry& e : base.boundary())
    if (e.node == base_node) {
      auto [kap, nu] = bp.at(e.face);
      if (kap > 0.0) s += tau * units.hbar * kap / units.m * e.surface_weight;
    }
  return s;
}
}  // namespace

JointTable joint_distribution_2particle(const CascadeModel& model,
                                        const Eigen::VectorXcd& psi0,
                                        double t_max) {
  if (model.particles() != 2)
    throw std::invalid_argument("joint distribution is implemented for N = 2");
  const CascadeStage& st2 = model.stages[0];
  const CascadeStage& st1 = model.stages[1];
  if (st2.grid->node_count() > 4096)
    throw SizeGuardError("joint table requires a tiny grid");

  JointTable jt;
  jt.tau = st2.prop->tau();
  jt.n_steps = steps_for(t_max, jt.tau);
  jt.cells1 = event_cells(*st2.grid);
  jt.cells2 = event_cells(*st1.grid);
  jt.f.assign(jt.n_steps * jt.c1() * jt.n_steps * jt.c2(), 0.0);
  jt.second_truncation.assign(jt.n_steps * jt.c1(), 0.0);
  jt.first_law.assign(jt.n_steps * jt.c1(), 0.0);

  // Recover per-cell boundary scale from the faces of the base grid. The
  // stage-2 boundary parameters are baked into H; re-derive them from the
  // flux factors is awkward, so the model carries them implicitly: read the
  // scale off the stage-1 (single particle) flux terms instead.
  const Grid& base = *model.base;
  auto e2c1 = entry_to_cell(*st1.H);
  auto e2c2 = entry_to_cell(*st2.H);
  std::vector<double> scale2(jt.c2(), 0.0);  // per 1-particle cell, tau*c summed
  for (size_t e = 0; e < st1.H->flux.size(); ++e)
    scale2[e2c1[e]] += jt.tau * st1.H->flux[e].factor.squaredNorm();
  // per 2-particle cell: same base-face scale, keyed by base node
  std::vector<double> scale1(jt.c1(), 0.0);
  {
    auto cells2 = event_cells(*st1.grid);
    for (long i = 0; i < jt.c1(); ++i)
      for (long k = 0; k < jt.c2(); ++k)
        if (jt.cells2[k].base_node == jt.cells1[i].base_node)
          scale1[i] = scale2[k];
  }

  Eigen::VectorXcd psi = psi0;
  for (long n1 = 0; n1 < jt.n_steps; ++n1) {
    auto [next, rec] = st2.prop->step(psi);
    Eigen::VectorXcd mid = 0.5 * (psi + next);
    for (size_t e = 0; e < rec.mass.size(); ++e)
      jt.first_law[n1 * jt.c1() + e2c2[e]] += rec.mass[e];

    for (long i1 = 0; i1 < jt.c1(); ++i1) {
      double s1 = scale1[i1];
      if (s1 <= 0.0) continue;
      Eigen::VectorXcd chi =
          slice_particle(*st2.grid, mid, jt.cells1[i1].particle,
                         jt.cells1[i1].base_node);
      Eigen::VectorXcd psi2 = chi;
      for (long g2 = n1 + 1; g2 < jt.n_steps; ++g2) {
        auto [next2, rec2] = st1.prop->step(psi2);
        for (size_t e = 0; e < rec2.mass.size(); ++e)
          jt.at(n1, i1, g2, e2c1[e]) += s1 * rec2.mass[e];
        psi2 = std::move(next2);
      }
      jt.second_truncation[n1 * jt.c1() + i1] =
          s1 * wnorm2(base.weights(), psi2, 1);
    }
    psi = std::move(next);
  }
  jt.first_truncation = wnorm2(st2.grid->weights(), psi, 1);
  return jt;
}

double JointTable::total_mass() const {
  double s = first_truncation;
  for (double v : f) s += v;
  for (double v : second_truncation) s += v;
  return s;
}

std::vector<double> JointTable::first_marginal() const {
  std::vector<double> m(n_steps * c1(), 0.0);
  for (long n1 = 0; n1 < n_steps; ++n1)
    for (long i1 = 0; i1 < c1(); ++i1) {
      double s = second_truncation[n1 * c1() + i1];
      for (long g2 = 0; g2 < n_steps; ++g2)
        for (long i2 = 0; i2 < c2(); ++i2) s += at(n1, i1, g2, i2);
      m[n1 * c1() + i1] = s;
    }
  return m;
}

namespace {
long compose_index(int particle, int n_particles, long nb, long b, long rest) {
  long full = 0, stride = 1;
  for (int p = 0; p < n_particles; ++p) {
    long v = (p == particle) ? b : rest % nb;
    if (p != particle) rest /= nb;
    full += v * stride;
    stride *= nb;
  }
  return full;
}
}  // namespace

Eigen::MatrixXcd collapse_superoperator_apply(const Grid& g2,
                                              const BoundaryParams& bp,
                                              const Units& units, int particle,
                                              const Eigen::MatrixXcd& rho_kernel) {
  auto base = g2.base_ptr();
  if (!base || g2.particle_count() != 2)
    throw std::invalid_argument("collapse superoperator is defined on 2-particle grids");
  const long nb = base->node_count();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nb, nb);
  for (const BoundaryEntry& e : base->boundary()) {
    auto [kap, nu] = bp.at(e.face);
    if (kap <= 0.0) continue;
    double c = units.hbar * kap / units.m * e.surface_weight;
    for (long y = 0; y < nb; ++y)
      for (long yp = 0; yp < nb; ++yp)
        out(y, yp) += c * rho_kernel(compose_index(particle, 2, nb, e.node, y),
                                     compose_index(particle, 2, nb, e.node, yp));
  }
  return out;
}

Eigen::MatrixXcd collapse_superoperator_choi(const Grid& g2,
                                             const BoundaryParams& bp,
                                             const Units& units, int particle) {
  auto base = g2.base_ptr();
  const long nin = g2.node_count();
  const long nout = base->node_count();
  if (nout * nin > 2048)
    throw SizeGuardError("Choi matrix requires a tiny grid");

  const Eigen::VectorXd& w = g2.weights();
  const Eigen::VectorXd& wr = base->weights();
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(nout * nin, nout * nin);
  Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(nin, nin);
  for (long j = 0; j < nin; ++j)
    for (long k = 0; k < nin; ++k) {
      // kernel of the matrix unit |e_j><e_k| in weighted-orthonormal coords
      unit(j, k) = 1.0 / std::sqrt(w[j] * w[k]);
      Eigen::MatrixXcd O = collapse_superoperator_apply(g2, bp, units, particle, unit);
      unit(j, k) = 0.0;
      for (long m = 0; m < nout; ++m)
        for (long n = 0; n < nout; ++n)
          C(m * nin + j, n * nin + k) = O(m, n) * std::sqrt(wr[m] * wr[n]);
    }
  return C;
}

SpectrumReport spectrum_report(const OperatorMatrix& H) {
  Eigen::MatrixXcd Hd = dense(H);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Hd);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on H");

  const long n = Hd.rows();
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    return es.eigenvalues()[a].real() < es.eigenvalues()[b].real();
  });

  SpectrumReport r;
  r.eigenvalues.resize(n);
  Eigen::MatrixXcd V(n, n);
  for (long i = 0; i < n; ++i) {
    r.eigenvalues[i] = es.eigenvalues()[order[i]];
    Eigen::VectorXcd v = es.eigenvectors().col(order[i]);
    V.col(i) = v / std::sqrt(wnorm2(H.grid->weights(), v, H.components));
  }
  r.gram.resize(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      r.gram(i, j) = wdot(H.grid->weights(), V.col(i), V.col(j), H.components);

  r.max_im = r.eigenvalues.imag().maxCoeff();
  r.max_offdiag_gram = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (i != j)
        r.max_offdiag_gram = std::max(r.max_offdiag_gram, std::abs(r.gram(i, j)));
  r.normality = normality_defect(H);
  return r;
}

}  // namespace absorb
