#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schedloc/experiments.hpp"
#include "schedloc/pipeline.hpp"

namespace {

using namespace schedloc;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitDataError = 2;
constexpr int kExitCheckFailure = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* config = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  if (config_required) config->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "RNG seed (overrides config/preset)");
  cmd->add_flag("--quiet", args.quiet, "suppress stdout summaries");
}

ExperimentConfig load_with_overrides(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.sim.rng_seed = *args.seed;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  return cfg;
}

int cmd_simulate(const CommonArgs& args, bool dump_matrices) {
  ExperimentConfig cfg = load_with_overrides(args);
  try {
    cfg.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const ScheduleMatrices matrices =
      build_schedule_matrices(cfg.sim.schedule, cfg.sim.geometry.num_anchors());
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);
  const auto csv_path = cfg.output_dir / "measurements.csv";
  write_measurements_csv(csv_path, cfg.sim.schedule, batches);

  if (dump_matrices) {
    write_matrix_csv(cfg.output_dir / "s.csv", matrices.s);
    write_matrix_csv(cfg.output_dir / "s_pinv.csv", matrices.s_pinv);
    write_matrix_csv(cfg.output_dir / "pi.csv", matrices.pi);
    write_matrix_csv(cfg.output_dir / "u.csv", matrices.u);
    write_matrix_csv(cfg.output_dir / "a.csv", matrices.a);
    write_matrix_csv(cfg.output_dir / "g_nominal.csv", matrices.g_nominal);
  }

  if (!args.quiet) {
    const int m = matrices.num_measurements();
    std::cout << "wrote " << csv_path.string() << " (" << batches.size() << " batches x " << m
              << " measurements)\n";
    std::cout << "k  pair   mean_ns          std_ns\n";
    for (int k = 0; k < m; ++k) {
      double sum = 0.0, sumsq = 0.0;
      for (const auto& b : batches) {
        sum += b.y[k];
        sumsq += b.y[k] * b.y[k];
      }
      const double mean = sum / static_cast<double>(batches.size());
      const double var = sumsq / static_cast<double>(batches.size()) - mean * mean;
      std::cout << k << "  " << cfg.sim.schedule.order[static_cast<std::size_t>(k)] << "->"
                << cfg.sim.schedule.order[static_cast<std::size_t>(k) + 1] << "   " << mean * 1e9
                << "   " << std::sqrt(std::max(var, 0.0)) * 1e9 << "\n";
    }
  }
  return kExitOk;
}

int cmd_calibrate(const CommonArgs& args, const std::string& in_path) {
  ExperimentConfig cfg = load_with_overrides(args);
  const std::vector<MeasurementBatch> batches =
      read_measurements_csv(in_path, cfg.sim.schedule);
  const ScheduleMatrices matrices =
      build_schedule_matrices(cfg.sim.schedule, cfg.sim.geometry.num_anchors());
  const CalibrationRun run = run_calibration(cfg, matrices, batches);

  write_calibrated_csv(cfg.output_dir / "calibrated.csv", cfg.sim.schedule, run.records);
  write_rejections_csv(cfg.output_dir / "rejections.csv", run.rejections);
  if (cfg.calibration.rls) {
    write_rls_trace_csv(cfg.output_dir / "rls_trace.csv", run.trace);
  }

  if (run.records.empty()) {
    std::cerr << "warning: every batch was rejected by the outlier rule; no calibrated rows\n";
  }
  if (!args.quiet) {
    std::cout << "kept " << run.records.size() << " of " << batches.size() << " batches";
    if (run.fallback_batches > 0) {
      std::cout << " (" << run.fallback_batches << " without delay payload)";
    }
    std::cout << "\n";
    if (cfg.calibration.rls && run.final_state.n_updates > 0) {
      std::cout << "theta_hat_ppm:";
      for (int i = 0; i < run.final_state.theta_hat.size(); ++i) {
        std::cout << ' ' << run.final_state.theta_hat[i] * 1e6;
      }
      std::cout << "\n";
    }
  }
  return kExitOk;
}

int cmd_localize(const CommonArgs& args, const std::string& in_path) {
  ExperimentConfig cfg = load_with_overrides(args);
  const std::vector<CalibratedRecord> records =
      read_calibrated_csv(in_path, cfg.sim.schedule);
  const ScheduleMatrices matrices =
      build_schedule_matrices(cfg.sim.schedule, cfg.sim.geometry.num_anchors());
  const LocalizationRun run = run_localization(cfg, matrices, records);

  const EllipseKind kind = cfg.sim.geometry.listener_true ? EllipseKind::Simulated
                                                          : EllipseKind::MapExperimental;
  write_text_file(cfg.output_dir / "estimates.json", estimates_json(run, kind));

  if (run.non_converged > 0) {
    std::cerr << "warning: " << run.non_converged << " batch estimate(s) did not converge\n";
  }
  if (!args.quiet) {
    std::cout << "pooled listener estimate: (" << run.pooled.listener().x() << ", "
              << run.pooled.listener().y() << ") m over " << records.size() << " batches\n";
    if (run.has_scatter_ellipse) {
      std::cout << "99% scatter ellipse semi-axes: " << run.scatter_ellipse.semi_major << ", "
                << run.scatter_ellipse.semi_minor << " m\n";
    }
  }
  return kExitOk;
}

int cmd_bound(const CommonArgs& args) {
  ExperimentConfig cfg = load_with_overrides(args);
  const ScheduleMatrices matrices =
      build_schedule_matrices(cfg.sim.schedule, cfg.sim.geometry.num_anchors());
  const BoundResult bound = run_bound(cfg, matrices);
  write_text_file(cfg.output_dir / "hcrb.json", bound_json(bound));
  if (!args.quiet) {
    std::cout << "HCRB 99% ellipse semi-axes: " << bound.ellipse.semi_major << ", "
              << bound.ellipse.semi_minor << " m\n";
  }
  return kExitOk;
}

int cmd_reproduce(const CommonArgs& args, const std::string& figure) {
  const std::filesystem::path base = args.out_dir.empty() ? "out" : args.out_dir;
  const ExperimentReport report = run_figure(figure, base / figure, args.seed);
  for (const CheckResult& check : report.checks) {
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << report.figure << ": " << check.name
              << " — " << check.detail << "\n";
  }
  if (!args.quiet) {
    std::cout << report.figure << " artifacts in " << (base / figure).string() << " ("
              << report.runtime_seconds << " s)\n";
  }
  return report.all_pass() ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schedule-based passive self-localization with clock-error mitigation"};
  app.require_subcommand(1);

  CommonArgs sim_args, cal_args, loc_args, bound_args, repro_args;
  bool dump_matrices = false;
  std::string cal_in, loc_in, figure;

  auto* sim = app.add_subcommand("simulate", "generate scheduled measurements (CSV)");
  add_common(sim, sim_args, true);
  sim->add_flag("--dump-matrices", dump_matrices, "also export S, S+, Pi, u, A, G as CSV");

  auto* cal = app.add_subcommand("calibrate", "delay retrieval, outlier screening, RLS skew estimation");
  add_common(cal, cal_args, true);
  cal->add_option("--in", cal_in, "measurement CSV")->required();

  auto* loc = app.add_subcommand("localize", "MAP position estimation from calibrated CSV");
  add_common(loc, loc_args, true);
  loc->add_option("--in", loc_in, "calibrated CSV")->required();

  auto* bnd = app.add_subcommand("bound", "hybrid Cramér-Rao bound for the configured scenario");
  add_common(bnd, bound_args, true);

  auto* repro = app.add_subcommand("reproduce", "run a built-in experiment preset with PASS/FAIL checks");
  add_common(repro, repro_args, false);
  repro->add_option("figure", figure, "fig2|fig3|fig4|fig6")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args, dump_matrices);
    if (cal->parsed()) return cmd_calibrate(cal_args, cal_in);
    if (loc->parsed()) return cmd_localize(loc_args, loc_in);
    if (bnd->parsed()) return cmd_bound(bound_args);
    if (repro->parsed()) return cmd_reproduce(repro_args, figure);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}
