#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace absorb {

enum class Side { Lower, Upper };

// One face of the boundary: which particle's coordinate reaches the wall,
// along which of its axes, and on which side.
struct FaceId {
  int particle = 0;
  int axis = 0;
  Side side = Side::Lower;
  bool operator==(const FaceId&) const = default;
};

std::string face_label(const FaceId& f);

struct DomainSpec {
  enum class Kind { Interval, Box, Product };
  Kind kind = Kind::Interval;
  std::vector<std::pair<double, double>> extents;  // per per-particle axis
  int particle_count = 1;

  int dim() const { return static_cast<int>(extents.size()); }
  void validate() const;  // throws std::invalid_argument
};

// A boundary node may lie on several faces (corners); it gets one entry per
// incident face, with the surface quadrature weight split per face.
struct BoundaryEntry {
  long node = 0;
  FaceId face;
  double surface_weight = 0.0;
};

// Vertex-centered tensor grid with trapezoidal quadrature weights. The
// weights define the inner product in which all norms, fluxes and adjoints
// are taken. Immutable after construction.
class Grid {
 public:
  static Grid build(const DomainSpec& spec, int nodes_per_axis);
  static Grid product(const Grid& base, int n_particles);

  long node_count() const { return static_cast<long>(w_.size()); }
  int total_dim() const { return static_cast<int>(nodes_.size()); }
  int particle_count() const { return particles_; }
  int per_particle_dim() const { return pdim_; }
  int axis_nodes(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double lower(int axis) const { return lo_[axis]; }
  double upper(int axis) const { return hi_[axis]; }
  double volume() const;

  const Eigen::VectorXd& weights() const { return w_; }
  const std::vector<BoundaryEntry>& boundary() const { return boundary_; }

  std::vector<int> unflatten(long node) const;
  long flatten(const std::vector<int>& idx) const;
  Eigen::VectorXd position(long node) const;
  Eigen::VectorXd outward_normal(const FaceId& f) const;
  bool on_boundary(long node) const;
  // Particles whose coordinate block touches the wall at this node.
  std::vector<int> boundary_particles(long node) const;

  // Base single-particle grid of a product grid (null for base grids).
  std::shared_ptr<const Grid> base_ptr() const { return base_; }

 private:
  Grid() = default;
  void build_boundary_registry();

  std::vector<int> nodes_;
  std::vector<double> lo_, hi_, h_;
  int particles_ = 1;
  int pdim_ = 1;
  Eigen::VectorXd w_;
  std::vector<BoundaryEntry> boundary_;
  std::shared_ptr<const Grid> base_;
};

// Weighted inner product <a,b>_w = sum_n w_n conj(a_n) b_n, extended
// componentwise when each node carries `components` entries.
std::complex<double> wdot(const Eigen::VectorXd& w, const Eigen::VectorXcd& a,
                          const Eigen::VectorXcd& b, int components = 1);
double wnorm2(const Eigen::VectorXd& w, const Eigen::VectorXcd& a,
              int components = 1);

}  // namespace absorb
