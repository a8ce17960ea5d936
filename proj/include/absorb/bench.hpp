#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace absorb {

struct BenchResiduals {
  double contraction = 0.0;
  double flux_balance = 0.0;
  double povm = 0.0;
  double dissipativity = 0.0;
};

struct BenchCaseReport {
  std::string name;
  long n_nodes = 0;
  long n_steps = 0;
  double wall_ms = 0.0;
  double solve_ms_per_step = 0.0;
  BenchResiduals residuals;
};

// Fixed deterministic case set; every case re-checks the exact invariants at
// scale, so a bench run doubles as an invariant sweep.
std::vector<BenchCaseReport> run_bench();

nlohmann::ordered_json bench_report_json(const std::vector<BenchCaseReport>& cases);

}  // namespace absorb
