#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absorb/detection.hpp"

namespace absorb {

// Doubles are printed with %.17g so every CSV re-parses bit-exactly.
std::string fmt_double(double v);

struct DistributionRow {
  long step = 0;
  double time = 0.0;
  std::string face;
  std::vector<double> x;
  double mass = 0.0;
};

void write_survival_csv(const std::string& path, const DetectionDistribution& d);
void write_distribution_csv(const std::string& path, const DetectionDistribution& d);
std::vector<DistributionRow> read_distribution_csv(const std::string& path);
nlohmann::ordered_json summary_json(const DetectionDistribution& d);

nlohmann::ordered_json povm_report_json(const DiscretePOVM& p);

void write_spectrum_csv(const std::string& path, const SpectrumReport& r);
void write_gram_csv(const std::string& path, const SpectrumReport& r);

nlohmann::ordered_json cascade_result_json(const CascadeResult& r, const Grid& base);
void write_runs_jsonl(const std::string& path, const std::vector<CascadeResult>& runs,
                      const Grid& base);
void write_joint_table_csv(const std::string& path, const JointTable& t,
                           const Grid& base);

void write_text(const std::string& path, const std::string& text);

}  // namespace absorb
