#include "absorb/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace absorb {

using nlohmann::json;

namespace {

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError(key + " required");
  return j[key].get<double>();
}

std::vector<double> axis_vector(const json& j, int dim, double fallback) {
  std::vector<double> v(dim, fallback);
  if (j.is_number()) {
    std::fill(v.begin(), v.end(), j.get<double>());
  } else if (j.is_array()) {
    if (static_cast<int>(j.size()) != dim)
      throw ConfigError("axis vector has wrong length");
    for (int a = 0; a < dim; ++a) v[a] = j[a].get<double>();
  } else if (!j.is_null()) {
    throw ConfigError("axis vector must be a number or array");
  }
  return v;
}

DomainSpec parse_domain(const json& j, int particles) {
  DomainSpec d;
  d.particle_count = particles;
  if (!j.contains("domain")) throw ConfigError("domain required");
  const json& dj = j["domain"];
  std::string kind = dj.value("kind", "interval");
  if (kind == "interval")
    d.kind = DomainSpec::Kind::Interval;
  else if (kind == "box")
    d.kind = DomainSpec::Kind::Box;
  else if (kind == "product")
    d.kind = DomainSpec::Kind::Product;
  else
    throw ConfigError("domain.kind must be interval, box or product");
  if (particles > 1) d.kind = DomainSpec::Kind::Product;

  if (!dj.contains("extents") || !dj["extents"].is_array() || dj["extents"].empty())
    throw ConfigError("domain.extents required");
  for (const auto& e : dj["extents"]) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("domain.extents entries must be [lo, hi] pairs");
    d.extents.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  if (d.kind == DomainSpec::Kind::Interval && d.dim() != 1)
    throw ConfigError("interval domain takes exactly one extent");
  return d;
}

InitialSpec parse_initial(const json& j, int dim) {
  InitialSpec s;
  if (!j.contains("initial")) {
    s.center.assign(dim, 0.0);
    s.k.assign(dim, 0.0);
    return s;
  }
  const json& ij = j["initial"];
  s.type = ij.value("type", "gaussian");
  if (s.type == "gaussian") {
    s.center = axis_vector(ij.contains("center") ? ij["center"] : json(), dim, 0.0);
    s.k = axis_vector(ij.contains("k") ? ij["k"] : json(), dim, 0.0);
    s.sigma = ij.value("sigma", 1.0);
    if (s.sigma <= 0.0) throw ConfigError("initial.sigma must be positive");
  } else if (s.type == "eigenmode") {
    s.eigenmode_index = ij.value("index", 0);
    if (s.eigenmode_index < 0) throw ConfigError("initial.index must be nonnegative");
  } else if (s.type == "csv") {
    if (!ij.contains("path")) throw ConfigError("initial.path required");
    s.csv_path = ij["path"].get<std::string>();
  } else {
    throw ConfigError("initial.type must be gaussian, eigenmode or csv");
  }
  if (ij.contains("spinor")) {
    for (const auto& c : ij["spinor"]) {
      if (c.is_number())
        s.spinor.emplace_back(c.get<double>(), 0.0);
      else if (c.is_array() && c.size() == 2)
        s.spinor.emplace_back(c[0].get<double>(), c[1].get<double>());
      else
        throw ConfigError("initial.spinor entries must be numbers or [re, im]");
    }
  }
  return s;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;

  std::string eq = j.value("equation", "schrodinger");
  if (eq == "schrodinger")
    cfg.equation = Equation::Schrodinger;
  else if (eq == "dirac")
    cfg.equation = Equation::Dirac;
  else
    throw ConfigError("equation must be schrodinger or dirac");

  cfg.particles = j.value("particles", 1);
  if (cfg.particles < 1 || cfg.particles > 3)
    throw ConfigError("particles must be 1, 2 or 3");
  cfg.domain = parse_domain(j, cfg.particles);

  if (!j.contains("nodes")) throw ConfigError("nodes required");
  cfg.nodes_per_axis = j["nodes"].get<int>();
  if (cfg.nodes_per_axis < 3) throw ConfigError("nodes must be at least 3");

  if (j.contains("units")) {
    cfg.units.hbar = j["units"].value("hbar", 1.0);
    cfg.units.m = j["units"].value("m", 1.0);
    cfg.units.c = j["units"].value("c", 1.0);
    if (cfg.units.hbar <= 0 || cfg.units.m <= 0 || cfg.units.c <= 0)
      throw ConfigError("units must be positive");
  }

  if (cfg.equation == Equation::Dirac) {
    if (cfg.domain.dim() != 1 || cfg.particles != 1)
      throw ConfigError("the dirac equation is evolved on a one-dimensional interval");
    if (!j.contains("theta")) throw ConfigError("theta required");
    cfg.theta = j["theta"].get<double>();
  } else {
    if (!j.contains("boundary") || !j["boundary"].contains("kappa"))
      throw ConfigError("boundary.kappa required");
    const json& bj = j["boundary"];
    cfg.boundary.kappa = require_number(bj, "kappa");
    cfg.boundary.nu = bj.value("nu", 0.0);
    if (bj.contains("faces")) {
      for (const auto& fo : bj["faces"]) {
        FaceBoundaryOverride o;
        o.axis = fo.value("axis", 0);
        if (o.axis < 0 || o.axis >= cfg.domain.dim())
          throw ConfigError("boundary.faces axis out of range");
        std::string side = fo.value("side", "lower");
        if (side == "lower")
          o.side = Side::Lower;
        else if (side == "upper")
          o.side = Side::Upper;
        else
          throw ConfigError("boundary.faces side must be lower or upper");
        o.kappa = fo.contains("kappa") ? fo["kappa"].get<double>() : cfg.boundary.kappa;
        o.nu = fo.contains("nu") ? fo["nu"].get<double>() : cfg.boundary.nu;
        cfg.boundary.overrides.push_back(o);
      }
    }
  }

  if (!j.contains("time")) throw ConfigError("time required");
  cfg.tau = require_number(j["time"], "tau");
  if (cfg.tau <= 0.0) throw ConfigError("time.tau must be positive");
  if (j["time"].contains("t_max"))
    cfg.t_max = j["time"]["t_max"].get<double>();
  else if (j["time"].contains("steps"))
    cfg.t_max = cfg.tau * j["time"]["steps"].get<long>();
  else
    throw ConfigError("time.t_max required");
  if (cfg.t_max <= 0.0) throw ConfigError("time.t_max must be positive");

  if (j.contains("potential")) {
    if (j["potential"].is_array() && !j["potential"].empty() &&
        j["potential"][0].is_object()) {
      for (const auto& p : j["potential"]) cfg.potential.push_back(p);
    } else {
      cfg.potential.push_back(j["potential"]);
    }
  } else {
    cfg.potential.push_back(json{{"type", "zero"}});
  }
  if (static_cast<int>(cfg.potential.size()) != 1 &&
      static_cast<int>(cfg.potential.size()) != cfg.particles)
    throw ConfigError("potential stage list length must match the particle count");

  cfg.initial = parse_initial(j, cfg.domain.dim());
  cfg.seed = j.value("seed", 1ull);
  cfg.output = j.value("output", "out");
  cfg.runs = j.value("runs", 1000l);
  if (cfg.runs < 1) throw ConfigError("runs must be positive");
  cfg.exhaustive = j.value("exhaustive", false);
  if (cfg.exhaustive && cfg.particles != 2)
    throw ConfigError("exhaustive mode requires particles = 2");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  return parse_config(j);
}

std::shared_ptr<const Grid> make_base_grid(const RunConfig& cfg) {
  DomainSpec base = cfg.domain;
  base.particle_count = 1;
  if (base.kind == DomainSpec::Kind::Product)
    base.kind = base.dim() == 1 ? DomainSpec::Kind::Interval : DomainSpec::Kind::Box;
  return std::make_shared<Grid>(Grid::build(base, cfg.nodes_per_axis));
}

std::shared_ptr<const Grid> make_grid(const RunConfig& cfg) {
  auto base = make_base_grid(cfg);
  if (cfg.particles == 1) return base;
  return std::make_shared<Grid>(Grid::product(*base, cfg.particles));
}

PotentialField make_potential(const json& spec, const Grid& grid,
                              const Units& units) {
  PotentialField V = zero_potential(grid);
  std::string type = spec.is_object() ? spec.value("type", "zero") : "zero";
  if (type == "zero") return V;

  const int dim = grid.per_particle_dim();
  if (type == "constant") {
    V.values.setConstant(spec.value("value", 0.0));
    return V;
  }
  if (type == "harmonic") {
    double omega = spec.value("omega", 1.0);
    std::vector<double> c =
        axis_vector(spec.contains("center") ? spec["center"] : json(), dim, 0.0);
    for (long n = 0; n < grid.node_count(); ++n) {
      Eigen::VectorXd x = grid.position(n);
      double v = 0.0;
      for (int p = 0; p < grid.particle_count(); ++p)
        for (int a = 0; a < dim; ++a) {
          double d = x[p * dim + a] - c[a];
          v += 0.5 * units.m * omega * omega * d * d;
        }
      V.values[n] = v;
    }
    return V;
  }
  if (type == "barrier") {
    double height = spec.value("height", 1.0);
    std::vector<double> lo =
        axis_vector(spec.contains("lo") ? spec["lo"] : json(), dim, 0.0);
    std::vector<double> hi =
        axis_vector(spec.contains("hi") ? spec["hi"] : json(), dim, 0.0);
    for (long n = 0; n < grid.node_count(); ++n) {
      Eigen::VectorXd x = grid.position(n);
      for (int p = 0; p < grid.particle_count(); ++p) {
        bool inside = true;
        for (int a = 0; a < dim; ++a)
          inside = inside && x[p * dim + a] >= lo[a] && x[p * dim + a] <= hi[a];
        if (inside) V.values[n] += height;
      }
    }
    return V;
  }
  if (type == "csv") {
    if (!spec.contains("path")) throw ConfigError("potential.path required");
    std::ifstream in(spec["path"].get<std::string>());
    if (!in)
      throw ConfigError("cannot open potential file: " +
                        spec["path"].get<std::string>());
    for (long n = 0; n < grid.node_count(); ++n)
      if (!(in >> V.values[n]))
        throw ConfigError("potential file has too few values");
    return V;
  }
  throw ConfigError("potential.type must be zero, constant, harmonic, barrier or csv");
}

std::shared_ptr<const OperatorMatrix> make_operator(const RunConfig& cfg,
                                                    std::shared_ptr<const Grid> grid) {
  PotentialField V = make_potential(cfg.potential.front(), *grid, cfg.units);
  if (cfg.equation == Equation::Dirac)
    return std::make_shared<OperatorMatrix>(
        assemble_dirac_1d(std::move(grid), cfg.units.m, V, cfg.theta, cfg.units));
  try {
    return std::make_shared<OperatorMatrix>(
        assemble_schrodinger(std::move(grid), V, cfg.boundary, cfg.units));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Eigen::VectorXcd make_initial(const RunConfig& cfg, const Grid& grid,
                              const OperatorMatrix& H) {
  const long n = grid.node_count();
  const int comps = H.components;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n * comps);

  std::vector<cdouble> spinor(comps, cdouble(0.0));
  if (comps == 1) {
    spinor[0] = 1.0;
  } else if (!cfg.initial.spinor.empty()) {
    if (static_cast<int>(cfg.initial.spinor.size()) != comps)
      throw ConfigError("initial.spinor length must match the spinor dimension");
    spinor = cfg.initial.spinor;
  } else {
    // default right-mover for the 1D two-spinor model
    spinor[0] = spinor[1] = 1.0 / std::sqrt(2.0);
  }

  if (cfg.initial.type == "gaussian") {
    const int dim = grid.per_particle_dim();
    for (long i = 0; i < n; ++i) {
      Eigen::VectorXd x = grid.position(i);
      cdouble amp = 1.0;
      for (int p = 0; p < grid.particle_count(); ++p)
        for (int a = 0; a < dim; ++a) {
          double d = x[p * dim + a] - cfg.initial.center[a];
          amp *= std::exp(cdouble(-d * d / (4.0 * cfg.initial.sigma * cfg.initial.sigma),
                                  cfg.initial.k[a] * x[p * dim + a]));
        }
      for (int c = 0; c < comps; ++c) psi[i * comps + c] = amp * spinor[c];
    }
  } else if (cfg.initial.type == "eigenmode") {
    if (cfg.equation == Equation::Dirac)
      throw ConfigError("eigenmode initial states are only built for the schrodinger branch");
    if (n > 2048)
      throw SizeGuardError("eigenmode initial state needs a dense solve; grid too large");
    BoundaryParams closed = cfg.boundary;
    closed.kappa = 0.0;
    for (auto& o : closed.overrides) o.kappa = 0.0;
    OperatorMatrix H0 = assemble_schrodinger(
        H.grid, make_potential(cfg.potential.front(), grid, cfg.units), closed,
        cfg.units);
    // symmetrize in the weighted-orthonormal frame, then pick the requested mode
    Eigen::VectorXd sq = grid.weights().array().sqrt();
    Eigen::MatrixXcd D = dense(H0);
    for (long r = 0; r < n; ++r)
      for (long c = 0; c < n; ++c) D(r, c) *= sq[r] / sq[c];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
    if (cfg.initial.eigenmode_index >= n)
      throw ConfigError("initial.index out of range");
    Eigen::VectorXcd v = es.eigenvectors().col(cfg.initial.eigenmode_index);
    for (long i = 0; i < n; ++i) psi[i] = v[i] / sq[i];
  } else if (cfg.initial.type == "csv") {
    std::ifstream in(cfg.initial.csv_path);
    if (!in) throw ConfigError("cannot open initial state file: " + cfg.initial.csv_path);
    std::string line;
    long i = 0;
    while (std::getline(in, line) && i < n * comps) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double re = 0.0, im = 0.0;
      if (!(ls >> re)) throw ConfigError("bad initial state file row");
      ls >> im;
      psi[i++] = cdouble(re, im);
    }
    if (i != n * comps) throw ConfigError("initial state file has too few values");
  }

  if (cfg.equation == Equation::Dirac)
    psi = project_dirac_boundary(grid, cfg.theta, std::move(psi));
  double nn = wnorm2(grid.weights(), psi, comps);
  if (nn <= 0.0) throw ConfigError("initial state has zero norm");
  return psi / std::sqrt(nn);
}

CascadeModel make_cascade_from_config(const RunConfig& cfg) {
  if (cfg.equation != Equation::Schrodinger)
    throw ConfigError("cascades are only built for the schrodinger branch");
  auto base = make_base_grid(cfg);
  std::vector<PotentialField> pots;
  for (int k = 0; k < cfg.particles; ++k) {
    const json& spec = cfg.potential.size() == 1
                           ? cfg.potential.front()
                           : cfg.potential[static_cast<size_t>(k)];
    Grid gk = cfg.particles - k == 1 ? *base : Grid::product(*base, cfg.particles - k);
    pots.push_back(make_potential(spec, gk, cfg.units));
  }
  return make_cascade_model(base, cfg.particles, pots, cfg.boundary, cfg.units,
                            cfg.tau);
}

}  // namespace absorb
