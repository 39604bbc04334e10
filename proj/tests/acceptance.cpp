// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and states its tolerance inline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stemtune/gp.hpp"
#include "stemtune/grid_search.hpp"
#include "stemtune/mobo.hpp"
#include "stemtune/pareto.hpp"
#include "stemtune/run_config.hpp"
#include "stemtune/trajectory.hpp"
#include "stemtune/virtual_scope.hpp"

namespace fs = std::filesystem;
using namespace stemtune;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

RunConfig base_config() {
  RunConfig cfg;
  cfg.optics.grid_size = 64;
  return cfg;
}

// --------------------------------------------------------------------------
// 1. First-order grid landscape: 7^3 vertices over +-10 nm, noise off; the
//    zero vertex attains the component-wise maximum of both rewards.

GridResult g_grid1;  // reused by criterion 3
RewardVector g_grid1_ref;

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = base_config();
  cfg.noise.enabled = false;
  cfg.space = SearchSpace::first_order();

  g_grid1 = grid_evaluate(cfg, 7);
  const double elapsed = seconds_since(t0);

  bool pass = g_grid1.points.size() == 343;
  int zero_idx = -1;
  double max_contrast = -1e300, max_fft = -1e300;
  for (size_t i = 0; i < g_grid1.points.size(); ++i) {
    const auto& p = g_grid1.points[i];
    if (p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0) zero_idx = static_cast<int>(i);
    max_contrast = std::max(max_contrast, g_grid1.rewards[i].contrast);
    max_fft = std::max(max_fft, g_grid1.rewards[i].fft);
  }
  pass = pass && zero_idx >= 0;
  if (zero_idx >= 0) {
    const RewardVector z = g_grid1.rewards[zero_idx];
    pass = pass && z.contrast == max_contrast && z.fft == max_fft;
    pass = pass && std::find(g_grid1.front.begin(), g_grid1.front.end(), zero_idx) !=
                       g_grid1.front.end();
  }
  pass = pass && elapsed < 60.0;

  // Shared reference point for criterion 3: min - 10% range per objective.
  double lo_c = 1e300, lo_f = 1e300;
  for (const auto& r : g_grid1.rewards) {
    lo_c = std::min(lo_c, r.contrast);
    lo_f = std::min(lo_f, r.fft);
  }
  g_grid1_ref = {lo_c - 0.1 * (max_contrast - lo_c), lo_f - 0.1 * (max_fft - lo_f)};

  report(1, pass,
         fmt("7^3 first-order grid: %zu evals, zero vertex maximal in both "
             "rewards and on the front, %.1f s",
             g_grid1.points.size(), elapsed));
}

// --------------------------------------------------------------------------
// 2. Second-order grid: 4 axes, 4 levels -> 256 vertices. Bounds are chosen
//    as [-100, 200] so the zero state is one of the 4 levels.

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = base_config();
  cfg.noise.enabled = false;
  cfg.space = SearchSpace{{{Coeff::c21a, -100.0, 200.0},
                           {Coeff::c21b, -100.0, 200.0},
                           {Coeff::c23a, -100.0, 200.0},
                           {Coeff::c23b, -100.0, 200.0}}};

  const GridResult grid = grid_evaluate(cfg, 4);
  const double elapsed = seconds_since(t0);

  bool pass = grid.points.size() == 256;
  int zero_idx = -1;
  for (size_t i = 0; i < grid.points.size(); ++i) {
    const auto& p = grid.points[i];
    if (p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0 && p[3] == 0.0) {
      zero_idx = static_cast<int>(i);
    }
  }
  pass = pass && zero_idx >= 0;
  if (zero_idx >= 0) {
    bool dominated = false;
    for (size_t j = 0; j < grid.rewards.size(); ++j) {
      if (static_cast<int>(j) != zero_idx &&
          dominates(grid.rewards[j], grid.rewards[zero_idx])) {
        dominated = true;
      }
    }
    pass = pass && !dominated;
  }
  pass = pass && elapsed < 60.0;
  report(2, pass,
         fmt("4^4 second-order grid: %zu evals, zero vertex non-dominated, %.1f s",
             grid.points.size(), elapsed));
}

// --------------------------------------------------------------------------
// 3. MOBO convergence: noisy 3D runs reach >= 95% of the grid-front
//    hypervolume (shared reference point) on >= 4 of 5 seeds.

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<RewardVector> grid_front;
  for (int i : g_grid1.front) grid_front.push_back(g_grid1.rewards[i]);
  const double hv_grid = hypervolume(grid_front, g_grid1_ref);

  RunConfig cfg = base_config();
  cfg.space = SearchSpace::first_order();
  cfg.noise.dose = 1e7;
  cfg.mobo.n_init = 8;
  cfg.mobo.n_iterations = 25;

  // The noise-free grid rewards sit on a different intensity scale than the
  // dose-normalized noisy images (the spectral reward is not scale
  // invariant), so the stated bound is loose. A matched-scale grid at the
  // same dose gives the strict convergence reference.
  RunConfig noisy_grid_cfg = cfg;
  const GridResult noisy_grid = grid_evaluate(noisy_grid_cfg, 7);
  std::vector<RewardVector> noisy_front;
  double lo_c = 1e300, hi_c = -1e300, lo_f = 1e300, hi_f = -1e300;
  for (const auto& r : noisy_grid.rewards) {
    lo_c = std::min(lo_c, r.contrast);
    hi_c = std::max(hi_c, r.contrast);
    lo_f = std::min(lo_f, r.fft);
    hi_f = std::max(hi_f, r.fft);
  }
  const RewardVector noisy_ref{lo_c - 0.1 * (hi_c - lo_c), lo_f - 0.1 * (hi_f - lo_f)};
  for (int i : noisy_grid.front) noisy_front.push_back(noisy_grid.rewards[i]);
  const double hv_noisy_grid = hypervolume(noisy_front, noisy_ref);

  int hits = 0, strict_hits = 0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    VirtualScope scope(cfg.optics, cfg.specimen, cfg.noise, cfg.latency, seed);
    const MoboResult result =
        run_mobo(scope, cfg.space, cfg.mobo, cfg.rewards, seed, nullptr);
    const double ratio = result.archive.hv_with_reference(g_grid1_ref) / hv_grid;
    const double strict =
        result.archive.hv_with_reference(noisy_ref) / hv_noisy_grid;
    if (result.completed && ratio >= 0.95) ++hits;
    if (result.completed && strict >= 0.95) ++strict_hits;
    ratios += fmt(" %.3f", strict);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = hits >= 4 && strict_hits >= 4 && elapsed < 300.0;
  report(3, pass,
         fmt("MOBO (8 init + 25 BO, dose 1e7): %d/5 seeds beat 95%% of the "
             "noise-free grid-front HV, %d/5 beat 95%% of the matched-dose "
             "grid-front HV (ratios:%s), %.1f s",
             hits, strict_hits, ratios.c_str(), elapsed));
}

// --------------------------------------------------------------------------
// 4. Physical-instrument results cannot be reproduced here; covered by the
//    simulated convergence (3) and the dimensionality ordering (7).

void criterion_4() {
  std::printf("[SKIP] criterion 4: hardware-instrument results are out of scope; "
              "covered by criteria 3 and 7\n");
}

// --------------------------------------------------------------------------
// 5. GP oracle equivalence on 50 random problems plus posterior-variance
//    monotonicity under added data.

void criterion_5() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool pass = true;
  double worst = 0.0;

  for (int problem = 0; problem < 50 && pass; ++problem) {
    const int d = 1 + static_cast<int>(unit(gen) * 7) % 7;
    const int n = 8 + static_cast<int>(unit(gen) * 23) % 23;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -10.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 10.0);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        X(i, a) = -10.0 + 20.0 * unit(gen);
        s += X(i, a);
      }
      y(i) = std::sin(0.3 * s) + 0.05 * X(i, 0);
    }
    const GPModel model = GPModel::fit(X, y, lo, hi);
    const KernelHyper h = model.hyper();

    // Independent dense solve with the same normalization and hypers.
    Eigen::MatrixXd Xn(n, d);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < d; ++a) Xn(i, a) = (X(i, a) - lo(a)) / (hi(a) - lo(a));
    }
    const double y_mean = y.mean();
    double y_std = std::sqrt((y.array() - y_mean).square().sum() / n);
    if (y_std <= 0.0) y_std = 1.0;
    const Eigen::VectorXd ys = (y.array() - y_mean) / y_std;
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) K(i, j) = rbf(Xn.row(i), Xn.row(j), h);
    }
    K.diagonal().array() += h.noise_var;
    const auto ldlt = K.ldlt();
    const Eigen::VectorXd alpha = ldlt.solve(ys);

    const double var_scale = h.signal_var * y_std * y_std;
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd x(d), xn(d);
      for (int a = 0; a < d; ++a) {
        x(a) = -10.0 + 20.0 * unit(gen);
        xn(a) = (x(a) - lo(a)) / (hi(a) - lo(a));
      }
      Eigen::VectorXd k(n);
      for (int i = 0; i < n; ++i) k(i) = rbf(Xn.row(i), xn, h);
      const double want_mean = k.dot(alpha) * y_std + y_mean;
      double vv = h.signal_var - k.dot(ldlt.solve(k));
      vv = std::clamp(vv, 0.0, h.signal_var);
      const double want_var = vv * y_std * y_std;

      const Posterior got = model.posterior(x);
      const double dm = std::abs(got.mean - want_mean) / std::max(std::abs(want_mean), y_std);
      const double dv = std::abs(got.variance - want_var) / std::max(want_var, var_scale);
      worst = std::max({worst, dm, dv});
      if (dm > 1e-8 || dv > 1e-8) pass = false;
    }

    // Monotonicity: same hypers and prior, more data, variance never
    // increases. Compared in standardized units so both models share the
    // same prior amplitude regardless of their output rescaling.
    if (n >= 12) {
      GPFitConfig fixed;
      fixed.fixed_hyper = h;
      const GPModel full = GPModel::fit(X, y, lo, hi, fixed);
      const GPModel part =
          GPModel::fit(X.topRows(n - 4), y.head(n - 4), lo, hi, fixed);
      for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd x(d);
        for (int a = 0; a < d; ++a) x(a) = -10.0 + 20.0 * unit(gen);
        const double v_full =
            full.posterior(x).variance / (full.output_std() * full.output_std());
        const double v_part =
            part.posterior(x).variance / (part.output_std() * part.output_std());
        if (v_full > v_part + 1e-10) pass = false;
      }
    }
  }
  report(5, pass,
         fmt("GP posterior matches independent dense solve on 50 random problems "
             "(worst rel dev %.2e <= 1e-8) with variance monotonicity",
             worst));
}

// --------------------------------------------------------------------------
// 6. Pareto and hypervolume oracles.

void criterion_6() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool fronts_ok = true;

  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(unit(gen) * 60);
    std::vector<RewardVector> pts(n);
    for (auto& p : pts) p = {unit(gen), unit(gen)};
    auto got = pareto_front(pts);
    std::sort(got.begin(), got.end());
    std::vector<int> want;
    for (int i = 0; i < n; ++i) {
      bool dominated = false;
      for (int j = 0; j < n && !dominated; ++j) {
        if (j != i && dominates(pts[j], pts[i])) dominated = true;
      }
      if (!dominated) want.push_back(i);
    }
    if (got != want) fronts_ok = false;
  }

  bool hv_ok = true;
  double worst_hv = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RewardVector> pts(40);
    for (auto& p : pts) p = {unit(gen), unit(gen)};
    std::vector<RewardVector> front;
    for (int i : pareto_front(pts)) front.push_back(pts[i]);
    const RewardVector ref{0.0, 0.0};
    const double exact = hypervolume(front, ref);

    // Suffix-max staircase lookup makes the 1e6-sample check O(log n) each.
    std::sort(front.begin(), front.end(),
              [](const RewardVector& a, const RewardVector& b) {
                return a.contrast < b.contrast;
              });
    std::vector<double> suffix_max_fft(front.size() + 1, -1e300);
    for (int i = static_cast<int>(front.size()) - 1; i >= 0; --i) {
      suffix_max_fft[i] = std::max(suffix_max_fft[i + 1], front[i].fft);
    }
    double hi_c = 0.0, hi_f = 0.0;
    for (const auto& p : front) {
      hi_c = std::max(hi_c, p.contrast);
      hi_f = std::max(hi_f, p.fft);
    }
    int inside = 0;
    const int samples = 1000000;
    for (int s = 0; s < samples; ++s) {
      const double c = unit(gen) * hi_c;
      const double f = unit(gen) * hi_f;
      const auto it = std::lower_bound(
          front.begin(), front.end(), c,
          [](const RewardVector& p, double v) { return p.contrast < v; });
      if (suffix_max_fft[it - front.begin()] >= f) ++inside;
    }
    const double mc = hi_c * hi_f * inside / samples;
    const double dev = std::abs(exact - mc) / std::max(mc, 1e-12);
    worst_hv = std::max(worst_hv, dev);
    if (dev > 0.01) hv_ok = false;
  }

  bool hvi_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RewardVector> pts(20);
    for (auto& p : pts) p = {unit(gen), unit(gen)};
    std::vector<RewardVector> front;
    for (int i : pareto_front(pts)) front.push_back(pts[i]);
    const RewardVector ref{-0.1, -0.1};
    for (int c = 0; c < 10; ++c) {
      const RewardVector cand{-0.3 + 1.6 * unit(gen), -0.3 + 1.6 * unit(gen)};
      const double v = hvi(front, ref, cand);
      if (v < 0.0) hvi_ok = false;
      bool dominated = false;
      for (const auto& p : front) {
        if (p.contrast >= cand.contrast && p.fft >= cand.fft) dominated = true;
      }
      if (dominated && v != 0.0) hvi_ok = false;
    }
  }

  report(6, fronts_ok && hv_ok && hvi_ok,
         fmt("front oracle on 1000 sets (%s), HV within 1%% of 1e6-sample MC on "
             "100 fronts (worst %.4f), hvi sign/zero exact (%s)",
             fronts_ok ? "exact" : "MISMATCH", worst_hv, hvi_ok ? "ok" : "violated"));
}

// --------------------------------------------------------------------------
// 7. Cost-ledger properties: timing decomposition, init-phase compute is
//    zero, 7D costs more model compute than 3D, bench profile books 4 s.

void criterion_7() {
  RunConfig cfg3 = base_config();
  cfg3.space = SearchSpace::first_order();
  cfg3.mobo.n_init = 8;
  cfg3.mobo.n_iterations = 10;
  cfg3.mobo.mc_samples = 64;
  cfg3.mobo.acq_restarts = 128;

  RunConfig cfg7 = cfg3;
  cfg7.space = SearchSpace::combined();

  auto run_one = [](const RunConfig& cfg, std::uint64_t seed) {
    VirtualScope scope(cfg.optics, cfg.specimen, cfg.noise, cfg.latency, seed);
    return run_mobo(scope, cfg.space, cfg.mobo, cfg.rewards, seed, nullptr);
  };

  bool decomposition_ok = true, init_zero_ok = true;
  double compute3 = 0.0, compute7 = 0.0;
  int n3 = 0, n7 = 0;
  for (std::uint64_t seed : {11ull, 12ull}) {
    for (int dim_case = 0; dim_case < 2; ++dim_case) {
      const MoboResult result = run_one(dim_case == 0 ? cfg3 : cfg7, seed);
      for (const auto& rec : result.records) {
        const double sum = rec.timing.hw_s + rec.timing.gp_fit_s + rec.timing.acq_opt_s;
        if (rec.timing.total_s < sum - 1e-9 || rec.timing.total_s > 1.01 * sum) {
          decomposition_ok = false;
        }
        if (rec.phase == "init" &&
            (rec.timing.gp_fit_s != 0.0 || rec.timing.acq_opt_s != 0.0)) {
          init_zero_ok = false;
        }
        if (rec.phase == "bo") {
          const double compute = rec.timing.gp_fit_s + rec.timing.acq_opt_s;
          if (dim_case == 0) {
            compute3 += compute;
            ++n3;
          } else {
            compute7 += compute;
            ++n7;
          }
        }
      }
    }
  }
  const double mean3 = compute3 / n3, mean7 = compute7 / n7;
  const bool ordering_ok = mean7 > mean3;

  // Bench profile: the 4 s acquisition latency is recorded per step.
  RunConfig bench = cfg3;
  bench.apply_profile("bench");
  bench.mobo.n_init = 4;
  bench.mobo.n_iterations = 3;
  const MoboResult bench_run = run_one(bench, 21);
  double hw = 0.0;
  for (const auto& rec : bench_run.records) hw += rec.timing.hw_s;
  const double mean_hw = hw / bench_run.records.size();
  const bool bench_ok = std::abs(mean_hw - 4.0) <= 0.1;

  report(7, decomposition_ok && init_zero_ok && ordering_ok && bench_ok,
         fmt("timing sums within 1%% (%s), init compute zero (%s), mean model "
             "compute 7D %.3f s > 3D %.3f s, bench mean hw %.3f s within 4.0 +- 0.1",
             decomposition_ok ? "ok" : "violated", init_zero_ok ? "ok" : "violated",
             mean7, mean3, mean_hw));
}

// --------------------------------------------------------------------------
// 8. Determinism and replay: byte-identical logs modulo wall-clock fields,
//    clean replay, and exact EHVI = HVI on a zero-variance posterior.

std::string canonical_jsonl(const fs::path& run_dir) {
  // Timestamps and measured durations are wall-clock artifacts; everything
  // else must match byte for byte.
  std::ifstream in(run_dir / "run.jsonl");
  std::string canonical, line;
  while (std::getline(in, line)) {
    auto j = nlohmann::ordered_json::parse(line);
    j.erase("timestamp");
    j.erase("timing");
    canonical += j.dump() + "\n";
  }
  return canonical;
}

void criterion_8() {
  RunConfig cfg = base_config();
  cfg.space = SearchSpace::first_order();
  cfg.mobo.n_init = 8;
  cfg.mobo.n_iterations = 5;
  cfg.mobo.mc_samples = 64;
  cfg.mobo.acq_restarts = 64;
  cfg.seed = 99;

  const fs::path dir_a = fs::temp_directory_path() / "stemtune_accept_run_a";
  const fs::path dir_b = fs::temp_directory_path() / "stemtune_accept_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  bool completed = true;
  for (const auto& dir : {dir_a, dir_b}) {
    VirtualScope scope(cfg.optics, cfg.specimen, cfg.noise, cfg.latency, cfg.seed);
    RunLogger logger(dir, cfg.to_snapshot());
    const MoboResult result =
        run_mobo(scope, cfg.space, cfg.mobo, cfg.rewards, cfg.seed, &logger);
    completed = completed && result.completed;
  }
  const bool identical = canonical_jsonl(dir_a) == canonical_jsonl(dir_b);

  const ReplayReport replay = replay_verify(dir_a);
  const bool replay_ok = replay.ok && replay.hv_mismatches == 0;

  // Zero-variance degeneracy: EHVI collapses to deterministic HVI exactly.
  Eigen::MatrixXd X(3, 1);
  X << 0.2, 0.5, 0.8;
  Eigen::VectorXd y0(3), y1(3);
  y0 << 1.0, 2.0, 0.5;
  y1 << 2.0, 1.0, 0.3;
  GPFitConfig fixed;
  fixed.fixed_hyper = KernelHyper{1.0, 0.5, 0.0};
  Eigen::VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  std::vector<GPModel> models;
  models.push_back(GPModel::fit(X, y0, lo, hi, fixed));
  models.push_back(GPModel::fit(X, y1, lo, hi, fixed));
  const std::vector<RewardVector> front = {{1.0, 2.0}, {2.0, 1.0}};
  bool degeneracy_ok = true;
  for (int i = 0; i < 3; ++i) {
    const std::vector<double> x = {X(i, 0)};
    const RewardVector mean{models[0].posterior(X.row(i)).mean,
                            models[1].posterior(X.row(i)).mean};
    if (ehvi(models, front, {0.0, 0.0}, x, 128, 7) != hvi(front, {0.0, 0.0}, mean)) {
      degeneracy_ok = false;
    }
  }

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  report(8, completed && identical && replay_ok && degeneracy_ok,
         fmt("paired runs byte-identical modulo wall-clock fields (%s), replay "
             "clean (%d records, max dev %.2e), EHVI = HVI exact on "
             "zero-variance cases (%s)",
             identical ? "yes" : "NO", replay.records_checked,
             replay.max_reward_rel_dev, degeneracy_ok ? "yes" : "no"));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (g_failures > 0) {
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("acceptance: all criteria passed\n");
  return 0;
}
