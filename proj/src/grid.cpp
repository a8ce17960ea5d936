#include "absorb/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace absorb {

std::string face_label(const FaceId& f) {
  return "p" + std::to_string(f.particle) + ".a" + std::to_string(f.axis) +
         (f.side == Side::Lower ? ".lower" : ".upper");
}

void DomainSpec::validate() const {
  if (extents.empty()) throw std::invalid_argument("domain.extents empty");
  for (const auto& [lo, hi] : extents)
    if (!(lo < hi)) throw std::invalid_argument("domain extents require lower < upper");
  if (particle_count < 1)
    throw std::invalid_argument("domain.particle_count must be positive");
  if (kind == Kind::Product && particle_count < 2)
    throw std::invalid_argument("product domain requires particle_count >= 2");
  if (kind == Kind::Interval && extents.size() != 1)
    throw std::invalid_argument("interval domain requires exactly one axis");
}

Grid Grid::build(const DomainSpec& spec, int nodes_per_axis) {
  spec.validate();
  if (nodes_per_axis < 3)
    throw std::invalid_argument("nodes_per_axis must be >= 3 (no interior node otherwise)");

  Grid g;
  int d = spec.dim();
  g.pdim_ = d;
  g.particles_ = 1;
  g.nodes_.assign(d, nodes_per_axis);
  for (const auto& [lo, hi] : spec.extents) {
    g.lo_.push_back(lo);
    g.hi_.push_back(hi);
    g.h_.push_back((hi - lo) / (nodes_per_axis - 1));
  }

  long n = 1;
  for (int a = 0; a < d; ++a) n *= g.nodes_[a];
  g.w_.resize(n);
  for (long i = 0; i < n; ++i) {
    auto idx = g.unflatten(i);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      double wa = g.h_[a];
      if (idx[a] == 0 || idx[a] == g.nodes_[a] - 1) wa *= 0.5;
      w *= wa;
    }
    g.w_[i] = w;
  }
  g.build_boundary_registry();

  if (spec.kind == DomainSpec::Kind::Product)
    return product(g, spec.particle_count);
  return g;
}

Grid Grid::product(const Grid& base, int n_particles) {
  if (base.particles_ != 1)
    throw std::invalid_argument("product grid requires a single-particle base");
  if (n_particles < 1)
    throw std::invalid_argument("particle count must be positive");
  if (n_particles == 1) return base;

  Grid g;
  g.particles_ = n_particles;
  g.pdim_ = base.pdim_;
  g.base_ = std::make_shared<Grid>(base);
  for (int p = 0; p < n_particles; ++p)
    for (int a = 0; a < base.pdim_; ++a) {
      g.nodes_.push_back(base.nodes_[a]);
      g.lo_.push_back(base.lo_[a]);
      g.hi_.push_back(base.hi_[a]);
      g.h_.push_back(base.h_[a]);
    }

  long n = 1;
  for (int nn : g.nodes_) n *= nn;
  long nb = base.node_count();
  g.w_.resize(n);
  for (long i = 0; i < n; ++i) {
    double w = 1.0;
    long rest = i;
    for (int p = 0; p < n_particles; ++p) {
      w *= base.w_[rest % nb];
      rest /= nb;
    }
    g.w_[i] = w;
  }
  g.build_boundary_registry();
  return g;
}

void Grid::build_boundary_registry() {
  boundary_.clear();
  long n = node_count();
  int D = total_dim();
  for (long i = 0; i < n; ++i) {
    auto idx = unflatten(i);
    for (int a = 0; a < D; ++a) {
      bool lower = idx[a] == 0;
      bool upper = idx[a] == nodes_[a] - 1;
      if (!lower && !upper) continue;
      // surface weight: trapezoidal weight of the transverse coordinates
      double wb = 1.0;
      for (int b = 0; b < D; ++b) {
        if (b == a) continue;
        double w = h_[b];
        if (idx[b] == 0 || idx[b] == nodes_[b] - 1) w *= 0.5;
        wb *= w;
      }
      FaceId f{a / pdim_, a % pdim_, lower ? Side::Lower : Side::Upper};
      boundary_.push_back({i, f, wb});
    }
  }
}

double Grid::volume() const {
  double v = 1.0;
  for (int a = 0; a < total_dim(); ++a) v *= hi_[a] - lo_[a];
  return v;
}

std::vector<int> Grid::unflatten(long node) const {
  std::vector<int> idx(total_dim());
  for (int a = 0; a < total_dim(); ++a) {
    idx[a] = static_cast<int>(node % nodes_[a]);
    node /= nodes_[a];
  }
  return idx;
}

long Grid::flatten(const std::vector<int>& idx) const {
  long node = 0, stride = 1;
  for (int a = 0; a < total_dim(); ++a) {
    node += stride * idx[a];
    stride *= nodes_[a];
  }
  return node;
}

Eigen::VectorXd Grid::position(long node) const {
  auto idx = unflatten(node);
  Eigen::VectorXd x(total_dim());
  for (int a = 0; a < total_dim(); ++a) x[a] = lo_[a] + h_[a] * idx[a];
  return x;
}

Eigen::VectorXd Grid::outward_normal(const FaceId& f) const {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(total_dim());
  n[f.particle * pdim_ + f.axis] = f.side == Side::Lower ? -1.0 : 1.0;
  return n;
}

bool Grid::on_boundary(long node) const {
  auto idx = unflatten(node);
  for (int a = 0; a < total_dim(); ++a)
    if (idx[a] == 0 || idx[a] == nodes_[a] - 1) return true;
  return false;
}

std::vector<int> Grid::boundary_particles(long node) const {
  auto idx = unflatten(node);
  std::vector<int> out;
  for (int p = 0; p < particles_; ++p) {
    for (int a = 0; a < pdim_; ++a) {
      int ax = p * pdim_ + a;
      if (idx[ax] == 0 || idx[ax] == nodes_[ax] - 1) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::complex<double> wdot(const Eigen::VectorXd& w, const Eigen::VectorXcd& a,
                          const Eigen::VectorXcd& b, int components) {
  std::complex<double> s = 0.0;
  for (long i = 0; i < w.size(); ++i)
    for (int c = 0; c < components; ++c)
      s += w[i] * std::conj(a[i * components + c]) * b[i * components + c];
  return s;
}

double wnorm2(const Eigen::VectorXd& w, const Eigen::VectorXcd& a, int components) {
  double s = 0.0;
  for (long i = 0; i < w.size(); ++i)
    for (int c = 0; c < components; ++c)
      s += w[i] * std::norm(a[i * components + c]);
  return s;
}

}  // namespace absorb
