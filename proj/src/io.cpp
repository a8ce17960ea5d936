#include "absorb/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace absorb {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_survival_csv(const std::string& path, const DetectionDistribution& d) {
  std::ostringstream out;
  out << "step,t,norm2\n";
  for (long n = 0; n < d.n_steps; ++n)
    out << n << ',' << fmt_double((n + 1) * d.tau) << ','
        << fmt_double(d.norm2[static_cast<size_t>(n)]) << '\n';
  write_text(path, out.str());
}

void write_distribution_csv(const std::string& path, const DetectionDistribution& d) {
  const auto& flux = d.op->flux;
  const Grid& g = *d.op->grid;
  std::ostringstream out;
  out << "step,time,face";
  for (int a = 0; a < g.total_dim(); ++a) out << ",x" << a;
  out << ",mass\n";
  for (long n = 0; n < d.n_steps; ++n)
    for (size_t e = 0; e < flux.size(); ++e) {
      out << n << ',' << fmt_double((n + 0.5) * d.tau) << ','
          << face_label(flux[e].face);
      Eigen::VectorXd x = g.position(flux[e].node);
      for (int a = 0; a < g.total_dim(); ++a) out << ',' << fmt_double(x[a]);
      out << ',' << fmt_double(d.mass[static_cast<size_t>(n)][e]) << '\n';
    }
  write_text(path, out.str());
}

std::vector<DistributionRow> read_distribution_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<DistributionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw std::runtime_error("bad row in " + path);
    DistributionRow r;
    r.step = std::stol(cells[0]);
    r.time = std::stod(cells[1]);
    r.face = cells[2];
    for (size_t i = 3; i + 1 < cells.size(); ++i) r.x.push_back(std::stod(cells[i]));
    r.mass = std::stod(cells.back());
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::ordered_json summary_json(const DetectionDistribution& d) {
  nlohmann::ordered_json j;
  j["total_detected"] = d.total_detected();
  j["survivor"] = d.survivor_mass;
  nlohmann::ordered_json per;
  for (const auto& [face, mass] : d.per_face_totals()) per[face] = mass;
  j["per_face"] = per;
  j["n_steps"] = d.n_steps;
  j["tau"] = d.tau;
  return j;
}

nlohmann::ordered_json povm_report_json(const DiscretePOVM& p) {
  nlohmann::ordered_json j;
  j["n_steps"] = p.n_steps;
  j["rows_per_step"] = p.rows_per_step;
  j["completeness_residual"] = p.completeness_residual();
  j["min_eig_E_inf"] = p.min_eig_E_inf();
  j["e_inf_vs_wtw_residual"] = p.e_inf_vs_wtw();
  return j;
}

void write_spectrum_csv(const std::string& path, const SpectrumReport& r) {
  std::ostringstream out;
  out << "index,re,im\n";
  for (long i = 0; i < r.eigenvalues.size(); ++i)
    out << i << ',' << fmt_double(r.eigenvalues[i].real()) << ','
        << fmt_double(r.eigenvalues[i].imag()) << '\n';
  write_text(path, out.str());
}

void write_gram_csv(const std::string& path, const SpectrumReport& r) {
  std::ostringstream out;
  out << "row,col,re,im\n";
  for (long i = 0; i < r.gram.rows(); ++i)
    for (long k = 0; k < r.gram.cols(); ++k)
      out << i << ',' << k << ',' << fmt_double(r.gram(i, k).real()) << ','
          << fmt_double(r.gram(i, k).imag()) << '\n';
  write_text(path, out.str());
}

nlohmann::ordered_json cascade_result_json(const CascadeResult& r, const Grid& base) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    nlohmann::ordered_json ej;
    ej["time"] = e.time;
    ej["step"] = e.step;
    ej["particle"] = e.particle;
    ej["face"] = face_label(e.face);
    Eigen::VectorXd x = base.position(e.base_node);
    nlohmann::ordered_json xs = nlohmann::ordered_json::array();
    for (long a = 0; a < x.size(); ++a) xs.push_back(x[a]);
    ej["x"] = xs;
    events.push_back(ej);
  }
  j["events"] = events;
  j["norm_factors"] = r.norm_factors;
  j["truncated"] = r.truncated;
  j["survivor_mass"] = r.survivor_mass;
  return j;
}

void write_runs_jsonl(const std::string& path, const std::vector<CascadeResult>& runs,
                      const Grid& base) {
  std::ostringstream out;
  for (const auto& r : runs) out << cascade_result_json(r, base).dump() << '\n';
  write_text(path, out.str());
}

void write_joint_table_csv(const std::string& path, const JointTable& t,
                           const Grid& base) {
  std::ostringstream out;
  out << "kind,n1,t1,particle1,x1,g2,t2,x2,mass\n";
  auto pos = [&](long node) { return fmt_double(base.position(node)[0]); };
  for (long n1 = 0; n1 < t.n_steps; ++n1)
    for (long i1 = 0; i1 < t.c1(); ++i1) {
      const EventCell& c1 = t.cells1[static_cast<size_t>(i1)];
      for (long g2 = 0; g2 < t.n_steps; ++g2)
        for (long i2 = 0; i2 < t.c2(); ++i2) {
          double m = t.at(n1, i1, g2, i2);
          if (m == 0.0) continue;
          out << "joint," << n1 << ',' << fmt_double((n1 + 0.5) * t.tau) << ','
              << c1.particle << ',' << pos(c1.base_node) << ',' << g2 << ','
              << fmt_double((g2 + 0.5) * t.tau) << ','
              << pos(t.cells2[static_cast<size_t>(i2)].base_node) << ','
              << fmt_double(m) << '\n';
        }
      double tr = t.second_truncation[static_cast<size_t>(n1 * t.c1() + i1)];
      if (tr != 0.0)
        out << "second_trunc," << n1 << ',' << fmt_double((n1 + 0.5) * t.tau) << ','
            << c1.particle << ',' << pos(c1.base_node) << ",,,," << fmt_double(tr)
            << '\n';
    }
  out << "first_trunc,,,,,,,," << fmt_double(t.first_truncation) << '\n';
  out << "total,,,,,,,," << fmt_double(t.total_mass()) << '\n';
  write_text(path, out.str());
}

}  // namespace absorb
