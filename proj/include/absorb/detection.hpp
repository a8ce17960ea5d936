#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absorb/propagator.hpp"
#include "absorb/schrodinger.hpp"

namespace absorb {

struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-(time step, boundary cell) probability mass plus the survivor mass.
struct DetectionDistribution {
  double tau = 0.0;
  long n_steps = 0;
  std::vector<std::vector<double>> mass;  // [step][flux entry]
  std::vector<double> norm2;              // ||psi||_w^2 after each step
  double survivor_mass = 0.0;
  std::shared_ptr<const OperatorMatrix> op;

  double total_detected() const;
  std::map<std::string, double> per_face_totals() const;
};

DetectionDistribution record_distribution(const CNPropagator& prop,
                                          const Eigen::VectorXcd& psi0,
                                          double t_max);

// Discrete J operator and POVM of the detection process. Row (step, entry,
// rank) of J carries sqrt(tau) * (F_b psi_mid)_r, so |J psi0|^2 summed over
// an outcome cell reproduces the detected mass there. Adjoints are taken in
// the weighted metric.
struct DiscretePOVM {
  Eigen::MatrixXcd J;    // outcome rows x state dim
  Eigen::MatrixXcd W_T;  // full-horizon propagator
  Eigen::VectorXd dof_weights;
  long n_steps = 0;
  long rows_per_step = 0;

  Eigen::MatrixXcd E_inf() const;  // I - J'J (weighted adjoint)
  double completeness_residual() const;  // ||J'J + W'W - I||
  double min_eig_E_inf() const;
  double e_inf_vs_wtw() const;  // ||(I - J'J) - W'W||
};

DiscretePOVM assemble_J(const CNPropagator& prop, double t_max);

struct DetectionEvent {
  long step = 0;
  double time = 0.0;  // step midpoint
  long node = 0;
  FaceId face;
  long flux_entry = 0;
};

// Inverse-CDF draw from the exact discrete distribution; empty optional
// means no detection within the horizon.
std::optional<DetectionEvent> sample_detection(const CNPropagator& prop,
                                               const Eigen::VectorXcd& psi0,
                                               double t_max, uint64_t seed);

// Unnormalized restriction of an N-particle state to {x_particle = X}.
Eigen::VectorXcd slice_particle(const Grid& g, const Eigen::VectorXcd& psi,
                                int particle, long base_node);

// Conditional wave function: normalized slice, plus the normalization
// factor N = 1/||slice||_w.
std::pair<Eigen::VectorXcd, double> collapse(const Grid& g,
                                             const Eigen::VectorXcd& psi,
                                             int particle, long base_node);

// Detection-event outcome cell: which particle, at which boundary node of
// the base grid.
struct EventCell {
  int particle = 0;
  long base_node = 0;
  bool operator==(const EventCell&) const = default;
};

std::vector<EventCell> event_cells(const Grid& g);
// flux entry index -> index into event_cells(grid)
std::vector<int> entry_to_cell(const OperatorMatrix& H);

// Propagators for every stage of the detect-collapse-continue process,
// stages[0] = N particles down to stages[N-1] = 1 particle.
struct CascadeStage {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const OperatorMatrix> H;
  std::shared_ptr<const CNPropagator> prop;
};

struct CascadeModel {
  std::shared_ptr<const Grid> base;
  std::vector<CascadeStage> stages;
  int particles() const { return static_cast<int>(stages.size()); }
};

// potentials[k] is sampled on the (N-k)-particle grid.
CascadeModel make_cascade_model(std::shared_ptr<const Grid> base, int n_particles,
                                const std::vector<PotentialField>& potentials,
                                const BoundaryParams& bp, const Units& units,
                                double tau);

struct CascadeEvent {
  double time = 0.0;
  long step = 0;     // global step index
  int particle = 0;  // original particle number
  long base_node = 0;
  FaceId face;
};

struct CascadeResult {
  std::vector<CascadeEvent> events;
  std::vector<double> norm_factors;  // N per collapse stage
  double survivor_mass = 0.0;        // at horizon, when truncated
  bool truncated = false;
};

CascadeResult cascade_run(const CascadeModel& model, const Eigen::VectorXcd& psi0,
                          double t_max, uint64_t seed);

// Exhaustive two-particle joint law f(t1, cell1, t2, cell2) plus truncation
// masses; second-event steps are indexed by global step.
struct JointTable {
  double tau = 0.0;
  long n_steps = 0;
  std::vector<EventCell> cells1;  // 2-particle cells
  std::vector<EventCell> cells2;  // 1-particle cells
  std::vector<double> f;          // [n1][c1][g2][c2]
  std::vector<double> second_truncation;  // [n1][c1]
  std::vector<double> first_law;          // [n1][c1], from the 2-particle flux
  double first_truncation = 0.0;

  long c1() const { return static_cast<long>(cells1.size()); }
  long c2() const { return static_cast<long>(cells2.size()); }
  double& at(long n1, long i1, long g2, long i2) {
    return f[((n1 * c1() + i1) * n_steps + g2) * c2() + i2];
  }
  double at(long n1, long i1, long g2, long i2) const {
    return f[((n1 * c1() + i1) * n_steps + g2) * c2() + i2];
  }
  double total_mass() const;
  std::vector<double> first_marginal() const;  // [n1][c1]
};

JointTable joint_distribution_2particle(const CascadeModel& model,
                                        const Eigen::VectorXcd& psi0,
                                        double t_max);

// Discrete collapse superoperator C(rho) = (hbar kappa/m) sum_b w_b
// <x_i=b|rho|x_i=b>, acting on operator kernels, and its Choi matrix in
// weighted-orthonormal coordinates.
Eigen::MatrixXcd collapse_superoperator_apply(const Grid& g2,
                                              const BoundaryParams& bp,
                                              const Units& units, int particle,
                                              const Eigen::MatrixXcd& rho_kernel);
Eigen::MatrixXcd collapse_superoperator_choi(const Grid& g2,
                                             const BoundaryParams& bp,
                                             const Units& units, int particle);

struct SpectrumReport {
  Eigen::VectorXcd eigenvalues;  // sorted by real part
  Eigen::MatrixXcd gram;         // weighted Gram of normalized eigenvectors
  double max_im = 0.0;
  double max_offdiag_gram = 0.0;
  double normality = 0.0;
};

SpectrumReport spectrum_report(const OperatorMatrix& H);

}  // namespace absorb
