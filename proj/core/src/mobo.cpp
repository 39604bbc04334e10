#include "stemtune/mobo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "stemtune/errors.hpp"
#include "stemtune/rng.hpp"

namespace stemtune {

namespace {

// Seed-derivation roles; one independent stream per (iteration, role).
constexpr std::uint64_t kRoleAcquire = 1;
constexpr std::uint64_t kRoleEhvi = 2;
constexpr std::uint64_t kRoleCandidates = 3;
constexpr std::uint64_t kRoleInitDesign = 4;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<std::vector<double>> initial_design(const SearchSpace& space, int n,
                                                std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("initial_design: need n >= 2");
  const int d = space.dim();
  rng::Stream stream(seed);

  // One stratum per point per axis, shuffled independently.
  std::vector<std::vector<int>> strata(d, std::vector<int>(n));
  for (int a = 0; a < d; ++a) {
    std::iota(strata[a].begin(), strata[a].end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(stream.uniform() * (i + 1));
      std::swap(strata[a][i], strata[a][std::min(j, i)]);
    }
  }

  std::vector<std::vector<double>> design(n, std::vector<double>(d));
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      const double u = (strata[a][i] + stream.uniform()) / n;
      design[i][a] = space.axes[a].lower + u * (space.axes[a].upper - space.axes[a].lower);
    }
  }
  return design;
}

double ehvi(const std::vector<GPModel>& models, std::span<const RewardVector> front,
            const RewardVector& ref, std::span<const double> x, int mc_samples,
            std::uint64_t seed) {
  Eigen::MatrixXd X(1, x.size());
  for (size_t i = 0; i < x.size(); ++i) X(0, i) = x[i];
  const auto samples = sample_joint(models, X, mc_samples, seed);

  double acc = 0.0;
  for (int s = 0; s < mc_samples; ++s) {
    const RewardVector f{samples[2 * static_cast<size_t>(s)],
                         samples[2 * static_cast<size_t>(s) + 1]};
    acc += hvi(front, ref, f);
  }
  return acc / mc_samples;
}

Proposal propose(const std::vector<GPModel>& models, const ParetoArchive& archive,
                 const SearchSpace& space, const MoboConfig& config,
                 std::uint64_t candidates_seed, std::uint64_t ehvi_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const int d = space.dim();
  const auto front = archive.front_rewards();
  const RewardVector ref = archive.reference();

  auto acq = [&](const std::vector<double>& x) {
    // Common random numbers across candidates: same seed everywhere.
    return ehvi(models, front, ref, x, config.mc_samples, ehvi_seed);
  };

  rng::Stream stream(candidates_seed);
  std::vector<std::vector<double>> candidates(config.acq_restarts, std::vector<double>(d));
  for (auto& c : candidates) {
    for (int a = 0; a < d; ++a) {
      c[a] = stream.uniform(space.axes[a].lower, space.axes[a].upper);
    }
  }

  std::vector<double> values(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) values[i] = acq(candidates[i]);

  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });

  std::vector<double> best_x = candidates[order[0]];
  double best_val = values[order[0]];

  if (best_val > 0.0) {
    const int n_refine = std::min<int>(config.acq_refine_top, static_cast<int>(order.size()));
    for (int r = 0; r < n_refine; ++r) {
      std::vector<double> x = candidates[order[r]];
      double val = values[order[r]];
      // Coordinate pattern search, step halving 10% -> 0.1% of range.
      double frac = 0.1;
      while (frac >= 0.001) {
        bool improved = false;
        for (int a = 0; a < d; ++a) {
          const double step = frac * (space.axes[a].upper - space.axes[a].lower);
          for (double dir : {+1.0, -1.0}) {
            std::vector<double> trial = x;
            trial[a] = std::clamp(trial[a] + dir * step, space.axes[a].lower,
                                  space.axes[a].upper);
            const double v = acq(trial);
            if (v > val) {
              val = v;
              x = trial;
              improved = true;
            }
          }
        }
        if (!improved) frac *= 0.5;
      }
      if (val > best_val) {
        best_val = val;
        best_x = x;
      }
    }
    return {std::move(best_x), best_val, false, seconds_since(t0)};
  }

  // Flat acquisition: fall back to the highest total posterior variance.
  double best_var = -1.0;
  std::vector<double> fallback = candidates[0];
  for (const auto& c : candidates) {
    Eigen::VectorXd x(d);
    for (int a = 0; a < d; ++a) x(a) = c[a];
    double total_var = 0.0;
    for (const auto& m : models) total_var += m.posterior(x).variance;
    if (total_var > best_var) {
      best_var = total_var;
      fallback = c;
    }
  }
  return {std::move(fallback), 0.0, true, seconds_since(t0)};
}

MoboResult run_mobo(Environment& env, const SearchSpace& space, const MoboConfig& config,
                    const RewardConfig& rewards, std::uint64_t master_seed,
                    RunLogger* logger) {
  space.validate();
  config.validate();

  MoboResult result;
  std::vector<std::pair<int, double>> hv_by_step;

  auto finalize = [&](bool completed, std::string error) {
    result.completed = completed;
    result.error = std::move(error);
    if (logger) {
      logger->write_pareto_csv(result.archive);
      logger->write_hypervolume_csv(hv_by_step);
      write_cost_csv(logger->dir(), [&] {
        CostReport report;
        double hw = 0;
        for (const auto& r : result.records) {
          report.rows.push_back(
              {r.step, r.timing.hw_s, r.timing.gp_fit_s, r.timing.acq_opt_s});
          hw += r.timing.hw_s;
        }
        if (!report.rows.empty()) report.mean_hw_s = hw / report.rows.size();
        return report;
      }());
    }
    return result;
  };

  // One observation: acquire, dump, score, archive, log.
  auto observe = [&](int step, const char* phase, const std::vector<double>& x,
                     TrajectoryRecord rec) -> bool {
    const auto t_step = std::chrono::steady_clock::now();
    rec.step = step;
    rec.phase = phase;
    const AberrationState state = space.to_state(x);
    rec.action = state;

    try {
      Acquisition acq = env.acquire(state);
      rec.acquire_seed = acq.seed;
      const double acquire_wall = seconds_since(t_step);

      const auto t_obs = std::chrono::steady_clock::now();
      Image observed = std::move(acq.image);
      if (logger) {
        auto [ref, round_trip] =
            logger->dump_image(step, observed, state, acq.seed, observed.sum());
        rec.image_ref = ref;
        observed = std::move(round_trip);
      }
      rec.rewards = evaluate(observed, rewards);
      const double obs_wall = seconds_since(t_obs);
      // Observation processing books on the hardware side of the ledger.
      rec.timing.hw_s = acq.hw_seconds + obs_wall;

      result.archive.add(x, rec.rewards);
      rec.ref_point = result.archive.reference();
      rec.hypervolume = result.archive.hv();
      hv_by_step.emplace_back(step, rec.hypervolume);

      // total = booked components + unattributed overhead (archive, logging).
      const double overhead = seconds_since(t_step) - acquire_wall - obs_wall;
      rec.timing.total_s = rec.timing.hw_s + rec.timing.gp_fit_s + rec.timing.acq_opt_s +
                           std::max(0.0, overhead);
      rec.timestamp = make_timestamp();
      result.records.push_back(rec);
      if (logger) logger->append(rec);
      return true;
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.timing.total_s =
          seconds_since(t_step) + rec.timing.gp_fit_s + rec.timing.acq_opt_s;
      rec.timestamp = make_timestamp();
      result.records.push_back(rec);
      if (logger) logger->append(rec);
      result.error = e.what();
      return false;
    }
  };

  const int n_init = config.resolved_n_init(space.dim());
  const auto design =
      initial_design(space, n_init, rng::derive_seed(master_seed, 0, kRoleInitDesign));
  for (int i = 0; i < n_init; ++i) {
    if (!observe(i, "init", design[i], TrajectoryRecord{})) {
      return finalize(false, result.error);
    }
  }

  for (int t = 0; t < config.n_iterations; ++t) {
    const int step = n_init + t;
    TrajectoryRecord rec;
    rec.candidates_seed = rng::derive_seed(master_seed, step, kRoleCandidates);
    rec.ehvi_seed = rng::derive_seed(master_seed, step, kRoleEhvi);

    std::vector<double> x_next;
    try {
      // Refit from scratch each iteration; per-objective fits are independent.
      const int n = static_cast<int>(result.archive.size());
      const int d = space.dim();
      Eigen::MatrixXd X(n, d);
      Eigen::VectorXd y_contrast(n), y_fft(n);
      for (int i = 0; i < n; ++i) {
        const auto& e = result.archive.entries()[i];
        for (int a = 0; a < d; ++a) X(i, a) = e.x[a];
        y_contrast(i) = e.f.contrast;
        y_fft(i) = e.f.fft;
      }
      Eigen::VectorXd lower(d), upper(d);
      for (int a = 0; a < d; ++a) {
        lower(a) = space.axes[a].lower;
        upper(a) = space.axes[a].upper;
      }
      std::vector<GPModel> models;
      models.push_back(GPModel::fit(X, y_contrast, lower, upper));
      models.push_back(GPModel::fit(X, y_fft, lower, upper));
      rec.timing.gp_fit_s = models[0].fit_seconds() + models[1].fit_seconds();
      for (const auto& m : models) {
        rec.gp_hyper.push_back(
            {m.hyper().signal_var, m.hyper().lengthscale, m.hyper().noise_var});
      }

      Proposal proposal = propose(models, result.archive, space, config,
                                  rec.candidates_seed, rec.ehvi_seed);
      rec.timing.acq_opt_s = proposal.seconds;
      rec.exploration_fallback = proposal.exploration_fallback;
      x_next = std::move(proposal.x);
    } catch (const std::exception& e) {
      rec.step = step;
      rec.phase = "bo";
      rec.error = e.what();
      rec.timestamp = make_timestamp();
      result.records.push_back(rec);
      if (logger) logger->append(rec);
      return finalize(false, e.what());
    }

    if (!observe(step, "bo", x_next, rec)) {
      return finalize(false, result.error);
    }
  }

  return finalize(true, "");
}

}  // namespace stemtune
