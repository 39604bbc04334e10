#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace stemtune {

struct KernelHyper {
  double signal_var = 1.0;
  double lengthscale = 0.5;  // in normalized (unit-cube) input units
  double noise_var = 1e-4;
};

/// Isotropic squared-exponential kernel.
double rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyper& hyper);

struct GPFitConfig {
  int n_starts = 8;
  int max_iterations = 200;          // Nelder-Mead iterations per start
  double log_l_lo = std::log(0.05);  // bounds in log space
  double log_l_hi = std::log(2.0);
  double log_sv_lo = std::log(1e-4);
  double log_sv_hi = std::log(1e2);
  double log_nv_lo = std::log(1e-6);
  double log_nv_hi = std::log(1e-1);
  std::uint64_t seed = 0x5eed5eedULL;  // fixed: fitting is deterministic
  std::optional<KernelHyper> fixed_hyper;  // skip ML-II, use these directly
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP with inputs normalized to the unit cube and outputs
/// standardized. Hyperparameters come from multi-start ML-II; the
/// (K + sigma_n^2 I) Cholesky factor and weights are cached at fit time.
class GPModel {
 public:
  /// X_raw: n x d rows of raw inputs; bounds give the normalization box.
  /// Duplicate inputs (within 1e-9 normalized) are averaged.
  static GPModel fit(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                     const GPFitConfig& config = {});

  Posterior posterior(const Eigen::VectorXd& x_raw) const;

  const KernelHyper& hyper() const { return hyper_; }
  double fit_seconds() const { return fit_seconds_; }
  int dim() const { return static_cast<int>(X_.cols()); }
  int n_train() const { return static_cast<int>(X_.rows()); }
  double output_mean() const { return y_mean_; }
  double output_std() const { return y_std_; }
  double log_marginal_likelihood() const { return lml_; }

  /// Residual of the cached solve, ||(K + nv I) w - y|| / ||y||.
  double solve_residual() const;

  /// Posterior over a candidate set in raw coordinates (standardized scale
  /// stripped off): mean vector and covariance matrix in output units.
  void joint_posterior(const Eigen::MatrixXd& X_raw, Eigen::VectorXd& mean,
                       Eigen::MatrixXd& cov) const;

 private:
  Eigen::VectorXd normalize(const Eigen::VectorXd& x_raw) const;

  Eigen::MatrixXd X_;  // normalized
  Eigen::VectorXd y_;  // standardized
  KernelHyper hyper_;
  Eigen::MatrixXd L_;       // chol(K + nv I + jitter)
  Eigen::VectorXd weights_;  // (K + nv I)^-1 y
  Eigen::VectorXd lower_, upper_;
  double y_mean_ = 0.0, y_std_ = 1.0;
  double fit_seconds_ = 0.0;
  double lml_ = 0.0;
};

/// Joint samples across independent per-objective models at shared
/// candidates. Layout: sample-major, samples[s][c][m] at
/// ((s * n_cand) + c) * n_models + m. Deterministic per seed.
std::vector<double> sample_joint(const std::vector<GPModel>& models,
                                 const Eigen::MatrixXd& X_candidates, int n_samples,
                                 std::uint64_t seed);

}  // namespace stemtune
