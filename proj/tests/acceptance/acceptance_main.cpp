// Acceptance suite: one numbered criterion per invocation (or "all").
// Prints one PASS/FAIL line per check and exits nonzero on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "schedloc/experiments.hpp"
#include "schedloc/pipeline.hpp"
#include "support.hpp"

using namespace schedloc;

namespace {

using Clock = std::chrono::steady_clock;

const std::filesystem::path kOutDir = "acceptance_out";

struct Criterion {
  int number = 0;
  std::string title;
  std::vector<CheckResult> checks;

  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }
};

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num_str(double value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Schedule algebra over 200 random valid schedules, N in {3,4,5}.
Criterion criterion_1() {
  Criterion crit{1, "schedule algebra on random valid schedules", {}};
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);

  int checked = 0;
  bool su_exact = true, kernel_ok = true, projector_ok = true;
  double worst_projector = 0.0;
  while (checked < 200) {
    const int n = 3 + checked % 3;
    const Schedule schedule =
        testing::random_valid_schedule(rng, n, testing::uniform_int(rng, 0, 4));
    const Eigen::MatrixXd s = build_s_matrix(schedule, n);
    const Eigen::VectorXd u = kernel_vector(n);
    if (!(s * u).isZero(0.0)) su_exact = false;
    const ScheduleDiagnosis diag = validate_schedule(s, n);
    if (!(diag.valid && diag.kernel_dim == 1)) kernel_ok = false;
    const Eigen::MatrixXd pi = build_projector(n);
    const double err = (pi * pseudoinverse(s) * s - pi).norm();
    worst_projector = std::max(worst_projector, err);
    if (err > 1e-10) projector_ok = false;
    ++checked;
  }
  const double runtime = elapsed(start);

  crit.checks.push_back({"s_times_u_is_exactly_zero", su_exact, "200 schedules"});
  crit.checks.push_back({"kernel_dimension_is_one", kernel_ok, "200 schedules"});
  crit.checks.push_back({"projector_identity_1e-10",
                         projector_ok,
                         "worst Frobenius error " + num_str(worst_projector)});
  crit.checks.push_back({"runtime_lt_10s", runtime < 10.0, num_str(runtime) + " s"});
  return crit;
}

// ---------------------------------------------------------------------------
// 2. Model conformance: simulated batches against an independent scalar
//    expansion, plus the worked three-anchor skew-bias vector.
Criterion criterion_2() {
  Criterion crit{2, "measurement model conformance", {}};
  std::mt19937_64 rng(1002);

  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const int n = 3 + draw % 3;
    SimConfig cfg;
    cfg.geometry = testing::random_geometry(rng, n);
    cfg.clocks.listener =
        ClockParams{testing::uniform_real(rng, -20e-6, 20e-6), 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      cfg.clocks.anchors.push_back(
          ClockParams{testing::uniform_real(rng, -20e-6, 20e-6), 0.0, 1e-9});
    }
    cfg.noise.channel_var = 0.0;
    cfg.schedule = testing::random_valid_schedule(rng, n, testing::uniform_int(rng, 0, 3));
    cfg.schedule.nominal_delay = testing::uniform_real(rng, 1e-3, 10e-3);
    cfg.n_batches = 1;
    cfg.rng_seed = 1000 + static_cast<std::uint64_t>(draw);

    const ScheduleMatrices matrices = build_schedule_matrices(cfg.schedule, n);
    const MeasurementBatch batch = simulate_batch(cfg, matrices, 0);

    // Independent route: per-row scalar expansion of the five model terms,
    // with ranges looked up directly from the geometry.
    const RangeVector rho = ranges_from_geometry(cfg.geometry);
    for (int k = 0; k < cfg.schedule.num_measurements(); ++k) {
      const int i = cfg.schedule.order[static_cast<std::size_t>(k)];
      const int j = cfg.schedule.order[static_cast<std::size_t>(k) + 1];
      const double srho = rho.anchor_pair(i, j) - rho.listener(i) + rho.listener(j);
      const double delta = cfg.schedule.nominal_delay;
      const double eps = batch.delta_actual[k] - delta;
      const double theta_holder =
          cfg.clocks.listener.skew - cfg.clocks.anchors[static_cast<std::size_t>(j - 1)].skew;
      const double expected = srho / kSpeedOfLight + delta +
                              cfg.clocks.listener.skew * srho / kSpeedOfLight +
                              theta_holder * delta + (1.0 + theta_holder) * eps;
      worst = std::max(worst, std::abs(batch.y[k] - expected));
    }
  }
  crit.checks.push_back({"closed_form_match_1e-15_s", worst < 1e-15,
                         "worst componentwise deviation " + num_str(worst) + " s"});

  // Worked example: the skew-bias vector of the [1,2,3,2,1,3] schedule is
  // δ[θ2, θ3, θ2, θ1, θ3], reproduced bit-exactly by Diag(D) A θ.
  {
    const Schedule schedule{{1, 2, 3, 2, 1, 3}, 3e-3};
    const ScheduleMatrices matrices = build_schedule_matrices(schedule, 3);
    Eigen::VectorXd theta(3);
    theta << 11e-6, -7e-6, 3e-6;
    const Eigen::VectorXd delays = Eigen::VectorXd::Constant(5, schedule.nominal_delay);
    const Eigen::VectorXd rd = delays.asDiagonal() * (matrices.a * theta);
    Eigen::VectorXd expected(5);
    expected << 3e-3 * theta[1], 3e-3 * theta[2], 3e-3 * theta[1], 3e-3 * theta[0],
        3e-3 * theta[2];
    crit.checks.push_back(
        {"rd_example_vector_bit_exact", rd == expected, "delta * [th2, th3, th2, th1, th3]"});
  }
  return crit;
}

// ---------------------------------------------------------------------------
// 8. Analytic MAP gradient against central finite differences.
Criterion criterion_8() {
  Criterion crit{8, "MAP gradient against finite differences", {}};
  std::mt19937_64 rng(1008);

  SimConfig sim;
  sim.geometry.anchors = {Vec2(0.0, 0.0), Vec2(10.33, 0.0), Vec2(4.90, 8.66)};
  sim.geometry.listener_true = Vec2(1.92, 2.42);
  sim.clocks.listener = ClockParams{0.0, 2.25e-18, 0.0};
  sim.clocks.anchors.assign(3, ClockParams{0.0, 2.25e-18, 0.0});
  sim.noise.channel_var = 2.25e-18;
  sim.schedule = Schedule{{1, 2, 3, 2, 1, 3, 1}, 3e-3};
  sim.rng_seed = 1008;
  const ScheduleMatrices matrices = build_schedule_matrices(sim.schedule, 3);
  const Prior prior =
      make_gaussian_prior(sim.geometry.anchors, *sim.geometry.listener_true, 0.01, 10.0);
  const Eigen::VectorXd d_vec =
      Eigen::VectorXd::Constant(matrices.num_measurements(), sim.schedule.nominal_delay);
  const MeasurementBatch batch = simulate_batch(sim, matrices, 0);

  const double h = 1e-6;
  double worst_rel = 0.0;
  for (int point = 0; point < 100; ++point) {
    Eigen::VectorXd x = prior.mu;
    for (int c = 0; c < x.size(); ++c) x[c] += testing::uniform_real(rng, -1.0, 1.0);
    const Eigen::VectorXd grad = map_cost_gradient(x, batch.y, d_vec, matrices, prior);
    Eigen::VectorXd fd(x.size());
    for (int c = 0; c < x.size(); ++c) {
      Eigen::VectorXd xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      fd[c] = (map_cost(xp, batch.y, d_vec, matrices, prior) -
               map_cost(xm, batch.y, d_vec, matrices, prior)) /
              (2 * h);
    }
    worst_rel = std::max(worst_rel, (grad - fd).norm() / grad.norm());
  }
  crit.checks.push_back({"gradient_rel_error_lt_1e-5", worst_rel < 1e-5,
                         "worst relative error " + num_str(worst_rel) + " over 100 points"});
  return crit;
}

Criterion from_report(int number, const std::string& title, const ExperimentReport& report,
                      const std::vector<std::string>& wanted) {
  Criterion crit{number, title, {}};
  for (const auto& check : report.checks) {
    for (const auto& prefix : wanted) {
      if (check.name.rfind(prefix, 0) == 0) crit.checks.push_back(check);
    }
  }
  return crit;
}

const ExperimentReport& fig6_report() {
  static const ExperimentReport report = run_fig6(kOutDir / "fig6");
  return report;
}

Criterion run_criterion(int number) {
  switch (number) {
    case 1:
      return criterion_1();
    case 2:
      return criterion_2();
    case 3:
      return from_report(3, "delay-retrieval variance reduction", run_fig3(kOutDir / "fig3"),
                         {"std_", "runtime_"});
    case 4:
      return from_report(4, "RLS oracle equivalence and convergence", run_fig4(kOutDir / "fig4"),
                         {"rls_", "converges_", "retrieval_"});
    case 5:
      return from_report(5, "MAP simulation bias at both listener positions", fig6_report(),
                         {"mean_bias_", "runtime_"});
    case 6:
      return from_report(6, "HCRB dominance", fig6_report(), {"hcrb_area_", "mc_minus_hcrb_"});
    case 7:
      return from_report(7, "TWR skew-error linearity", run_fig2(kOutDir / "fig2"),
                         {"linearity_", "slope_"});
    case 8:
      return criterion_8();
    case 9:
      return from_report(9, "end-to-end calibration benefit",
                         run_calibration_benefit(kOutDir / "benefit"), {"raw_", "calibrated_"});
    default:
      std::fprintf(stderr, "unknown criterion %d\n", number);
      std::exit(2);
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> numbers;
  if (argc <= 1 || std::string(argv[1]) == "all") {
    for (int i = 1; i <= 9; ++i) numbers.push_back(i);
  } else {
    for (int i = 1; i < argc; ++i) numbers.push_back(std::atoi(argv[i]));
  }

  bool all_pass = true;
  for (int number : numbers) {
    const Criterion crit = run_criterion(number);
    for (const auto& check : crit.checks) {
      std::printf("[%s] criterion %d (%s): %s — %s\n", check.pass ? "PASS" : "FAIL",
                  crit.number, crit.title.c_str(), check.name.c_str(), check.detail.c_str());
    }
    all_pass = all_pass && crit.pass();
  }
  return all_pass ? 0 : 1;
}
