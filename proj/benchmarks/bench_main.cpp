#include <benchmark/benchmark.h>

#include <random>

#include "stemtune/gp.hpp"
#include "stemtune/mobo.hpp"
#include "stemtune/optics.hpp"
#include "stemtune/pareto.hpp"
#include "stemtune/rewards.hpp"
#include "stemtune/virtual_scope.hpp"

using namespace stemtune;

namespace {

OpticalConfig optics_for(int grid) {
  OpticalConfig cfg;
  cfg.grid_size = grid;
  cfg.pixel_size_nm = 0.02 * 128 / grid;  // keep the field of view fixed
  return cfg;
}

void BM_probe_psf(benchmark::State& state) {
  const OpticalConfig cfg = optics_for(static_cast<int>(state.range(0)));
  AberrationState s;
  s[Coeff::c10] = 3.0;
  s[Coeff::c12a] = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(probe_psf(s, cfg));
  }
}
BENCHMARK(BM_probe_psf)->Arg(64)->Arg(128)->Arg(256);

void BM_acquire(benchmark::State& state) {
  const OpticalConfig cfg = optics_for(static_cast<int>(state.range(0)));
  VirtualScope scope(cfg, {}, {}, {}, 1);
  AberrationState s;
  s[Coeff::c10] = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scope.acquire(s));
  }
}
BENCHMARK(BM_acquire)->Arg(64)->Arg(128);

void BM_rewards(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Image img(n, 0.02);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (auto& v : img.data) v = u(gen);
  const RewardConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(img, cfg));
  }
}
BENCHMARK(BM_rewards)->Arg(64)->Arg(128)->Arg(256);

void BM_gp_fit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 3;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      X(i, a) = u(gen);
      s += X(i, a);
    }
    y(i) = std::sin(0.3 * s);
  }
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -10.0);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(GPModel::fit(X, y, lo, hi));
  }
}
BENCHMARK(BM_gp_fit)->Arg(10)->Arg(20)->Arg(40);

void BM_ehvi(benchmark::State& state) {
  const int n = 20, d = 3;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y0(n), y1(n);
  std::vector<RewardVector> points(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      X(i, a) = u(gen);
      s += X(i, a);
    }
    y0(i) = std::sin(0.3 * s);
    y1(i) = std::cos(0.2 * s);
    points[i] = {y0(i), y1(i)};
  }
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -10.0);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 10.0);
  std::vector<GPModel> models;
  models.push_back(GPModel::fit(X, y0, lo, hi));
  models.push_back(GPModel::fit(X, y1, lo, hi));
  std::vector<RewardVector> front;
  for (int i : pareto_front(points)) front.push_back(points[i]);
  const RewardVector ref{-2.0, -2.0};
  const std::vector<double> x = {1.0, -2.0, 3.0};
  const int mc = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ehvi(models, front, ref, x, mc, 7));
  }
}
BENCHMARK(BM_ehvi)->Arg(64)->Arg(128)->Arg(256);

void BM_hypervolume(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RewardVector> pts(n);
  for (auto& p : pts) p = {u(gen), u(gen)};
  const RewardVector ref{0.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume(pts, ref));
  }
}
BENCHMARK(BM_hypervolume)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
