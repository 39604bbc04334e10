#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stemtune/gp.hpp"

using namespace stemtune;

namespace {

// Direct dense-solve posterior oracle on the unit cube (identity input
// normalization) with fixed hyperparameters.
Posterior posterior_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const KernelHyper& h, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(X.rows());
  const double y_mean = y.mean();
  const double y_std = std::sqrt((y.array() - y_mean).square().sum() / n);
  const double ys_scale = y_std > 0.0 ? y_std : 1.0;
  Eigen::VectorXd ys = (y.array() - y_mean) / ys_scale;

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K(i, j) = rbf(X.row(i), X.row(j), h);
  }
  K.diagonal().array() += h.noise_var;
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) k(i) = rbf(X.row(i), x, h);

  const Eigen::VectorXd alpha = K.ldlt().solve(ys);
  const Eigen::VectorXd v = K.ldlt().solve(k);
  Posterior p;
  p.mean = k.dot(alpha) * ys_scale + y_mean;
  double var = h.signal_var - k.dot(v);
  var = std::clamp(var, 0.0, h.signal_var);
  p.variance = var * ys_scale * ys_scale;
  return p;
}

Eigen::VectorXd unit_bounds_lo(int d) { return Eigen::VectorXd::Zero(d); }
Eigen::VectorXd unit_bounds_hi(int d) { return Eigen::VectorXd::Ones(d); }

}  // namespace

TEST_CASE("rbf kernel values") {
  KernelHyper h{2.0, 0.5, 0.0};
  Eigen::VectorXd a(2), b(2);
  a << 0.1, 0.2;
  b << 0.1, 0.2;
  CHECK(rbf(a, a, h) == doctest::Approx(2.0).epsilon(1e-15));
  b << 0.6, 0.2;  // distance 0.5 = one lengthscale
  CHECK(rbf(a, b, h) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(rbf(a, b, h) == doctest::Approx(rbf(b, a, h)).epsilon(1e-15));
}

TEST_CASE("fixed-hyper posterior matches the dense-solve oracle") {
  std::mt19937_64 gen(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 12, d = 2;
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = u(gen);
    X(i, 1) = u(gen);
    y(i) = std::sin(3.0 * X(i, 0)) + 0.5 * X(i, 1) * X(i, 1);
  }
  GPFitConfig cfg;
  cfg.fixed_hyper = KernelHyper{1.5, 0.4, 1e-4};
  const GPModel model = GPModel::fit(X, y, unit_bounds_lo(d), unit_bounds_hi(d), cfg);
  CHECK(model.hyper().lengthscale == 0.4);
  CHECK(model.solve_residual() < 1e-8);

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(d);
    x << u(gen), u(gen);
    const Posterior got = model.posterior(x);
    const Posterior want = posterior_oracle(X, y, *cfg.fixed_hyper, x);
    CHECK(got.mean == doctest::Approx(want.mean).epsilon(1e-8));
    CHECK(got.variance == doctest::Approx(want.variance).epsilon(1e-8));
  }
}

TEST_CASE("fitted GP interpolates low-noise observations") {
  std::mt19937_64 gen(67);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const int n = 20;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = u(gen);
    y(i) = std::sin(0.3 * X(i, 0));
  }
  Eigen::VectorXd lo(1), hi(1);
  lo << -10.0;
  hi << 10.0;
  const GPModel model = GPModel::fit(X, y, lo, hi);

  const double y_range = y.maxCoeff() - y.minCoeff();
  for (int i = 0; i < n; ++i) {
    const Posterior p = model.posterior(X.row(i));
    CHECK(std::abs(p.mean - y(i)) / y_range < 0.05);
    CHECK(p.variance >= 0.0);
  }
  // Extrapolation far outside the data reverts toward the output mean.
  Eigen::VectorXd far(1);
  far << 60.0;
  const Posterior p = model.posterior(far);
  CHECK(p.mean == doctest::Approx(model.output_mean()).epsilon(1e-6));
}

TEST_CASE("fitting is deterministic") {
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(15, 2);
  Eigen::VectorXd y(15);
  for (int i = 0; i < 15; ++i) {
    X(i, 0) = u(gen);
    X(i, 1) = u(gen);
    y(i) = X(i, 0) * X(i, 1);
  }
  const GPModel a = GPModel::fit(X, y, unit_bounds_lo(2), unit_bounds_hi(2));
  const GPModel b = GPModel::fit(X, y, unit_bounds_lo(2), unit_bounds_hi(2));
  CHECK(a.hyper().signal_var == b.hyper().signal_var);
  CHECK(a.hyper().lengthscale == b.hyper().lengthscale);
  CHECK(a.hyper().noise_var == b.hyper().noise_var);
  CHECK(a.log_marginal_likelihood() == b.log_marginal_likelihood());
}

TEST_CASE("fitted lengthscale respects the configured bounds") {
  std::mt19937_64 gen(73);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(25, 1);
  Eigen::VectorXd y(25);
  for (int i = 0; i < 25; ++i) {
    X(i, 0) = u(gen);
    y(i) = u(gen);  // white noise drives lengthscale toward the boundary
  }
  GPFitConfig cfg;
  const GPModel m = GPModel::fit(X, y, unit_bounds_lo(1), unit_bounds_hi(1), cfg);
  CHECK(m.hyper().lengthscale >= std::exp(cfg.log_l_lo) * (1 - 1e-12));
  CHECK(m.hyper().lengthscale <= std::exp(cfg.log_l_hi) * (1 + 1e-12));
  CHECK(m.hyper().noise_var >= std::exp(cfg.log_nv_lo) * (1 - 1e-12));
  CHECK(m.hyper().noise_var <= std::exp(cfg.log_nv_hi) * (1 + 1e-12));
}

TEST_CASE("duplicate inputs are averaged") {
  Eigen::MatrixXd X(4, 1);
  X << 0.2, 0.2, 0.8, 0.8;
  Eigen::VectorXd y(4);
  y << 1.0, 3.0, -1.0, -3.0;
  GPFitConfig cfg;
  cfg.fixed_hyper = KernelHyper{1.0, 0.3, 1e-6};
  const GPModel m = GPModel::fit(X, y, unit_bounds_lo(1), unit_bounds_hi(1), cfg);
  CHECK(m.n_train() == 2);
  Eigen::VectorXd x(1);
  x << 0.2;
  CHECK(m.posterior(x).mean == doctest::Approx(2.0).epsilon(1e-2));
  x << 0.8;
  CHECK(m.posterior(x).mean == doctest::Approx(-2.0).epsilon(1e-2));
}

TEST_CASE("posterior mean is equivariant under affine output transforms") {
  std::mt19937_64 gen(79);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = u(gen);
    y(i) = std::cos(4.0 * X(i, 0));
  }
  GPFitConfig cfg;
  cfg.fixed_hyper = KernelHyper{1.0, 0.3, 1e-4};
  const GPModel base = GPModel::fit(X, y, unit_bounds_lo(1), unit_bounds_hi(1), cfg);
  const GPModel shifted =
      GPModel::fit(X, (5.0 * y.array() + 2.0).matrix(), unit_bounds_lo(1),
                   unit_bounds_hi(1), cfg);
  Eigen::VectorXd x(1);
  x << 0.37;
  CHECK(shifted.posterior(x).mean ==
        doctest::Approx(5.0 * base.posterior(x).mean + 2.0).epsilon(1e-8));
  CHECK(shifted.posterior(x).variance ==
        doctest::Approx(25.0 * base.posterior(x).variance).epsilon(1e-8));
}

TEST_CASE("joint posterior diagonal agrees with the pointwise posterior") {
  std::mt19937_64 gen(83);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(12, 2);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    X(i, 0) = u(gen);
    X(i, 1) = u(gen);
    y(i) = X(i, 0) - X(i, 1);
  }
  const GPModel m = GPModel::fit(X, y, unit_bounds_lo(2), unit_bounds_hi(2));

  Eigen::MatrixXd C(3, 2);
  C << 0.1, 0.9, 0.5, 0.5, 0.9, 0.1;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  m.joint_posterior(C, mean, cov);
  REQUIRE(mean.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const Posterior p = m.posterior(C.row(i));
    CHECK(mean(i) == doctest::Approx(p.mean).epsilon(1e-9));
    CHECK(cov(i, i) == doctest::Approx(p.variance).epsilon(1e-6));
  }
  CHECK((cov - cov.transpose()).norm() < 1e-12);
}

TEST_CASE("sample_joint is deterministic per seed and matches its posterior") {
  std::mt19937_64 gen(89);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = u(gen);
    y(i) = std::sin(6.0 * X(i, 0));
  }
  std::vector<GPModel> models;
  models.push_back(GPModel::fit(X, y, unit_bounds_lo(1), unit_bounds_hi(1)));
  models.push_back(GPModel::fit(X, (2.0 * y).eval(), unit_bounds_lo(1), unit_bounds_hi(1)));

  Eigen::MatrixXd C(2, 1);
  C << 0.33, 0.66;
  const auto s1 = sample_joint(models, C, 5000, 123);
  const auto s2 = sample_joint(models, C, 5000, 123);
  const auto s3 = sample_joint(models, C, 5000, 124);
  CHECK(s1 == s2);
  CHECK(s1 != s3);
  REQUIRE(s1.size() == 5000u * 2u * 2u);

  // Empirical moments agree with the analytic posterior (MC tolerance).
  for (int m = 0; m < 2; ++m) {
    for (int c = 0; c < 2; ++c) {
      double acc = 0.0, acc2 = 0.0;
      for (int s = 0; s < 5000; ++s) {
        const double v = s1[(static_cast<size_t>(s) * 2 + c) * 2 + m];
        acc += v;
        acc2 += v * v;
      }
      const double mean = acc / 5000;
      const double var = acc2 / 5000 - mean * mean;
      const Posterior p = models[m].posterior(C.row(c));
      const double sd = std::sqrt(p.variance);
      CHECK(std::abs(mean - p.mean) < 5.0 * sd / std::sqrt(5000.0) + 1e-12);
      if (p.variance > 1e-12) {
        CHECK(var == doctest::Approx(p.variance).epsilon(0.15));
      }
    }
  }
}

TEST_CASE("degenerate posterior collapses samples onto the mean exactly") {
  Eigen::MatrixXd X(3, 1);
  X << 0.1, 0.5, 0.9;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  GPFitConfig cfg;
  cfg.fixed_hyper = KernelHyper{1.0, 0.5, 0.0};  // noiseless interpolation
  std::vector<GPModel> models;
  models.push_back(GPModel::fit(X, y, unit_bounds_lo(1), unit_bounds_hi(1), cfg));

  Eigen::MatrixXd C(1, 1);
  C << 0.5;  // training input: zero posterior variance
  const auto samples = sample_joint(models, C, 64, 7);
  for (double v : samples) CHECK(v == models[0].posterior(C.row(0)).mean);
}
