#include "absorb/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "absorb/bench.hpp"
#include "absorb/config.hpp"
#include "absorb/io.hpp"

namespace absorb {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool allow_emitting = false;
};

fs::path prepare_out(const CommonOpts& opts, const RunConfig& cfg) {
  std::string dir = cfg.output;
  if (!opts.out_dir.empty()) dir = opts.out_dir;
  if (const char* env = std::getenv("ABSORBD_OUT"); env && *env) dir = env;
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

RunConfig load(const CommonOpts& opts) {
  RunConfig cfg = load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.boundary.allow_emitting = opts.allow_emitting;
  return cfg;
}

long horizon_steps(const RunConfig& cfg) {
  long n = static_cast<long>(std::llround(cfg.t_max / cfg.tau));
  if (n < 1) throw ConfigError("time.t_max must cover at least one step");
  return n;
}

int cmd_run(const CommonOpts& opts) {
  RunConfig cfg = load(opts);
  fs::path out = prepare_out(opts, cfg);
  auto grid = make_grid(cfg);
  auto H = make_operator(cfg, grid);
  CNPropagator prop(H, cfg.tau);
  Eigen::VectorXcd psi0 = make_initial(cfg, *grid, *H);
  DetectionDistribution d = record_distribution(prop, psi0, cfg.tau * horizon_steps(cfg));

  double budget = std::abs(1.0 - d.total_detected() - d.survivor_mass);
  if (budget > 1e-8)
    throw InvariantError("probability budget violated: detected + survivor != 1 (residual " +
                         std::to_string(budget) + ")");

  write_survival_csv((out / "survival.csv").string(), d);
  write_distribution_csv((out / "distribution.csv").string(), d);
  write_text((out / "summary.json").string(), summary_json(d).dump(2) + "\n");
  return 0;
}

int cmd_povm(const CommonOpts& opts) {
  RunConfig cfg = load(opts);
  fs::path out = prepare_out(opts, cfg);
  auto grid = make_grid(cfg);
  auto H = make_operator(cfg, grid);
  CNPropagator prop(H, cfg.tau);
  DiscretePOVM povm = assemble_J(prop, cfg.tau * horizon_steps(cfg));
  write_text((out / "povm_report.json").string(), povm_report_json(povm).dump(2) + "\n");
  return 0;
}

int cmd_cascade(const CommonOpts& opts) {
  RunConfig cfg = load(opts);
  fs::path out = prepare_out(opts, cfg);
  CascadeModel model = make_cascade_from_config(cfg);
  const Grid& top = *model.stages.front().grid;
  Eigen::VectorXcd psi0 = make_initial(cfg, top, *model.stages.front().H);
  const double t_max = cfg.tau * horizon_steps(cfg);

  std::vector<CascadeResult> results(static_cast<size_t>(cfg.runs));
  int jobs = std::max(1, opts.jobs);
  auto worker = [&](long lo, long hi) {
    for (long r = lo; r < hi; ++r)
      results[static_cast<size_t>(r)] =
          cascade_run(model, psi0, t_max, cfg.seed + static_cast<uint64_t>(r));
  };
  if (jobs == 1) {
    worker(0, cfg.runs);
  } else {
    std::vector<std::thread> pool;
    long chunk = (cfg.runs + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t) {
      long lo = t * chunk, hi = std::min<long>(cfg.runs, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  write_runs_jsonl((out / "runs.jsonl").string(), results, *model.base);

  if (cfg.exhaustive) {
    JointTable t = joint_distribution_2particle(model, psi0, t_max);
    double total = t.total_mass();
    if (std::abs(total - 1.0) > 1e-8)
      throw InvariantError("joint table total mass " + std::to_string(total) +
                           " deviates from 1");
    write_joint_table_csv((out / "joint_table.csv").string(), t, *model.base);
  }
  return 0;
}

int cmd_spectrum(const CommonOpts& opts) {
  RunConfig cfg = load(opts);
  fs::path out = prepare_out(opts, cfg);
  auto grid = make_grid(cfg);
  auto H = make_operator(cfg, grid);
  SpectrumReport rep = spectrum_report(*H);
  double scale = std::max(1.0, rep.eigenvalues.cwiseAbs().maxCoeff());
  if (rep.max_im > 1e-10 * scale)
    throw InvariantError("spectrum escapes the closed lower half plane: max Im " +
                         std::to_string(rep.max_im));
  write_spectrum_csv((out / "spectrum.csv").string(), rep);
  write_gram_csv((out / "gram.csv").string(), rep);
  return 0;
}

int cmd_bench(const CommonOpts& opts) {
  RunConfig cfg;  // bench ignores the config beyond the output directory
  if (!opts.config_path.empty()) cfg = load(opts);
  fs::path out = prepare_out(opts, cfg);
  auto cases = run_bench();
  write_text((out / "bench.json").string(), bench_report_json(cases).dump(2) + "\n");
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"absorbd: absorbing-boundary detection statistics toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    auto* c = sub->add_option("--config", opts.config_path, "run config (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--jobs", opts.jobs, "Monte Carlo worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--allow-emitting", opts.allow_emitting,
                  "permit kappa < 0 (norm-growing boundary)");
  };

  auto* run = app.add_subcommand("run", "evolve and record the detection distribution");
  auto* povm = app.add_subcommand("povm", "assemble the discrete POVM and report");
  auto* cascade = app.add_subcommand("cascade", "detect-collapse-continue runs");
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and eigenvector Gram");
  auto* bench = app.add_subcommand("bench", "deterministic benchmark/invariant sweep");
  add_common(run);
  add_common(povm);
  add_common(cascade);
  add_common(spectrum);
  add_common(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cmd_run(opts);
    if (povm->parsed()) return cmd_povm(opts);
    if (cascade->parsed()) return cmd_cascade(opts);
    if (spectrum->parsed()) return cmd_spectrum(opts);
    if (bench->parsed()) return cmd_bench(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << '\n';
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace absorb
