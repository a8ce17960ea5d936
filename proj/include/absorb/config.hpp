#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absorb/detection.hpp"
#include "absorb/dirac.hpp"

namespace absorb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Equation { Schrodinger, Dirac };

struct InitialSpec {
  std::string type = "gaussian";  // gaussian | eigenmode | csv
  std::vector<double> center;
  double sigma = 1.0;
  std::vector<double> k;
  std::vector<cdouble> spinor;  // Dirac component weights
  int eigenmode_index = 0;
  std::string csv_path;
};

struct RunConfig {
  Equation equation = Equation::Schrodinger;
  DomainSpec domain;
  int nodes_per_axis = 0;
  int particles = 1;
  std::vector<nlohmann::json> potential;  // one spec per cascade stage
  BoundaryParams boundary;
  double theta = 0.0;
  Units units;
  double tau = 0.0;
  double t_max = 0.0;
  InitialSpec initial;
  uint64_t seed = 1;
  std::string output = "out";
  long runs = 1000;        // cascade Monte Carlo runs
  bool exhaustive = false; // N = 2 joint table
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

std::shared_ptr<const Grid> make_grid(const RunConfig& cfg);
std::shared_ptr<const Grid> make_base_grid(const RunConfig& cfg);
PotentialField make_potential(const nlohmann::json& spec, const Grid& grid,
                              const Units& units);
std::shared_ptr<const OperatorMatrix> make_operator(const RunConfig& cfg,
                                                    std::shared_ptr<const Grid> grid);
Eigen::VectorXcd make_initial(const RunConfig& cfg, const Grid& grid,
                              const OperatorMatrix& H);
CascadeModel make_cascade_from_config(const RunConfig& cfg);

}  // namespace absorb
