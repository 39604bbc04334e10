#include "stemtune/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "stemtune/errors.hpp"
#include "stemtune/rng.hpp"

namespace stemtune {

namespace {

constexpr double kNoiseFloor = 1e-6;
constexpr double kBuildJitter = 1e-10;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const KernelHyper& hyper) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd K(n, n);
  const double inv2l2 = 1.0 / (2.0 * hyper.lengthscale * hyper.lengthscale);
  for (int i = 0; i < n; ++i) {
    K(i, i) = hyper.signal_var;
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      K(i, j) = K(j, i) = hyper.signal_var * std::exp(-d2 * inv2l2);
    }
  }
  return K;
}

/// Negative log marginal likelihood; +inf on factorization failure.
double nlml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelHyper& hyper) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd K = kernel_matrix(X, hyper);
  K.diagonal().array() += hyper.noise_var + kBuildJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
  return 0.5 * y.dot(alpha) + log_det + 0.5 * n * std::log(2.0 * M_PI);
}

struct LogTheta {
  double sv, l, nv;  // log signal_var, log lengthscale, log noise_var
  KernelHyper to_hyper() const { return {std::exp(sv), std::exp(l), std::exp(nv)}; }
};

}  // namespace

double rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyper& hyper) {
  if (a.size() != b.size()) throw std::invalid_argument("rbf: dimension mismatch");
  const double d2 = (a - b).squaredNorm();
  return hyper.signal_var * std::exp(-d2 / (2.0 * hyper.lengthscale * hyper.lengthscale));
}

Eigen::VectorXd GPModel::normalize(const Eigen::VectorXd& x_raw) const {
  Eigen::VectorXd z(x_raw.size());
  for (int i = 0; i < x_raw.size(); ++i) {
    const double span = upper_(i) - lower_(i);
    z(i) = (x_raw(i) - lower_(i)) / (span > 0.0 ? span : 1.0);
  }
  return z;
}

GPModel GPModel::fit(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                     const GPFitConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n_in = static_cast<int>(X_raw.rows());
  const int d = static_cast<int>(X_raw.cols());
  if (n_in < 2) throw std::invalid_argument("gp fit: need at least 2 points");
  if (lower.size() != d || upper.size() != d) {
    throw std::invalid_argument("gp fit: bounds dimension mismatch");
  }

  GPModel model;
  model.lower_ = lower;
  model.upper_ = upper;

  // Normalize to the unit cube, then average duplicates (< 1e-9 apart).
  Eigen::MatrixXd Xn(n_in, d);
  for (int i = 0; i < n_in; ++i) Xn.row(i) = model.normalize(X_raw.row(i).transpose());

  std::vector<int> group(n_in, -1);
  std::vector<int> reps;
  for (int i = 0; i < n_in; ++i) {
    for (size_t g = 0; g < reps.size(); ++g) {
      if ((Xn.row(i) - Xn.row(reps[g])).norm() < 1e-9) {
        group[i] = static_cast<int>(g);
        break;
      }
    }
    if (group[i] < 0) {
      group[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  const int n = static_cast<int>(reps.size());
  if (n < 2) throw std::invalid_argument("gp fit: fewer than 2 distinct inputs");
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y_acc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) X.row(i) = Xn.row(reps[i]);
  for (int i = 0; i < n_in; ++i) {
    y_acc(group[i]) += y_raw(i);
    counts(group[i]) += 1.0;
  }
  const Eigen::VectorXd y_dedup = y_acc.cwiseQuotient(counts);

  model.y_mean_ = y_dedup.mean();
  const double var = (y_dedup.array() - model.y_mean_).square().mean();
  model.y_std_ = std::sqrt(var);
  if (!(model.y_std_ > 1e-12)) model.y_std_ = 1.0;
  model.X_ = X;
  model.y_ = (y_dedup.array() - model.y_mean_) / model.y_std_;

  // ML-II: multi-start coordinate pattern search in log space.
  const double lo[3] = {config.log_sv_lo, config.log_l_lo, config.log_nv_lo};
  const double hi[3] = {config.log_sv_hi, config.log_l_hi, config.log_nv_hi};
  auto objective = [&](const LogTheta& t) { return nlml(model.X_, model.y_, t.to_hyper()); };
  auto clamp_theta = [&](LogTheta t) {
    t.sv = std::clamp(t.sv, lo[0], hi[0]);
    t.l = std::clamp(t.l, lo[1], hi[1]);
    t.nv = std::clamp(t.nv, lo[2], hi[2]);
    return t;
  };

  rng::Stream starts(config.seed);
  LogTheta best{std::log(1.0), std::log(0.5), std::log(1e-4)};
  double best_val = std::numeric_limits<double>::infinity();
  if (config.fixed_hyper) {
    const auto& h = *config.fixed_hyper;
    best = {std::log(h.signal_var), std::log(h.lengthscale), std::log(h.noise_var)};
    best_val = objective(best);
  }
  for (int s = 0; config.fixed_hyper ? false : s < config.n_starts; ++s) {
    LogTheta t = s == 0 ? LogTheta{std::log(1.0), std::log(0.5), std::log(1e-4)}
                        : LogTheta{starts.uniform(lo[0], hi[0]), starts.uniform(lo[1], hi[1]),
                                   starts.uniform(lo[2], hi[2])};
    t = clamp_theta(t);
    double val = objective(t);
    double step = 0.5;
    int iter = 0;
    while (step > 1e-3 && iter < config.max_iterations) {
      bool improved = false;
      double* fields[3] = {&t.sv, &t.l, &t.nv};
      for (int c = 0; c < 3; ++c) {
        for (double dir : {+1.0, -1.0}) {
          LogTheta trial = t;
          double* f = (c == 0) ? &trial.sv : (c == 1) ? &trial.l : &trial.nv;
          *f = std::clamp(*fields[c] + dir * step, lo[c], hi[c]);
          const double v = objective(trial);
          if (v < val - 1e-12) {
            val = v;
            t = trial;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
      ++iter;
    }
    if (val < best_val) {
      best_val = val;
      best = t;
    }
  }

  model.hyper_ = best.to_hyper();
  if (!config.fixed_hyper) {
    model.hyper_.noise_var = std::max(model.hyper_.noise_var, kNoiseFloor);
  } else {
    model.hyper_ = *config.fixed_hyper;
  }
  model.lml_ = -best_val;

  // Cache the solve; jitter escalation 1e-8 x10 up to 1e-4 only if the
  // plain factorization fails.
  Eigen::MatrixXd K = kernel_matrix(model.X_, model.hyper_);
  K.diagonal().array() += model.hyper_.noise_var;
  bool ok = false;
  for (double jitter = 0.0; jitter <= 1e-4 + 1e-12;
       jitter = (jitter == 0.0 ? 1e-8 : jitter * 10.0)) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      model.L_ = llt.matrixL();
      model.weights_ = llt.solve(model.y_);
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalFailure("gp fit: Cholesky failed after jitter escalation");

  model.fit_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return model;
}

double GPModel::solve_residual() const {
  Eigen::MatrixXd K = kernel_matrix(X_, hyper_);
  K.diagonal().array() += hyper_.noise_var;
  const double ynorm = y_.norm();
  return (K * weights_ - y_).norm() / (ynorm > 0.0 ? ynorm : 1.0);
}

Posterior GPModel::posterior(const Eigen::VectorXd& x_raw) const {
  const Eigen::VectorXd z = normalize(x_raw);
  const int n = n_train();
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) k_star(i) = rbf(z, X_.row(i).transpose(), hyper_);

  const double mean_std = k_star.dot(weights_);
  const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(k_star);
  double variance = hyper_.signal_var - v.squaredNorm();
  variance = std::clamp(variance, 0.0, hyper_.signal_var);

  return {y_mean_ + y_std_ * mean_std, y_std_ * y_std_ * variance};
}

void GPModel::joint_posterior(const Eigen::MatrixXd& X_raw, Eigen::VectorXd& mean,
                              Eigen::MatrixXd& cov) const {
  const int m = static_cast<int>(X_raw.rows());
  const int n = n_train();
  Eigen::MatrixXd Z(m, dim());
  for (int i = 0; i < m; ++i) Z.row(i) = normalize(X_raw.row(i).transpose());

  Eigen::MatrixXd Ks(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      Ks(i, j) = rbf(X_.row(i).transpose(), Z.row(j).transpose(), hyper_);
    }
  }
  Eigen::MatrixXd Kss(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Kss(i, j) = Kss(j, i) = rbf(Z.row(i).transpose(), Z.row(j).transpose(), hyper_);
    }
  }

  const Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Ks);
  // Same dot-product reduction as posterior() so the two paths agree bitwise.
  mean.resize(m);
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd k_star = Ks.col(j);
    mean(j) = y_mean_ + y_std_ * k_star.dot(weights_);
  }
  cov = (y_std_ * y_std_) * (Kss - V.transpose() * V);
  cov = 0.5 * (cov + cov.transpose());  // kill asymmetry from round-off
}

std::vector<double> sample_joint(const std::vector<GPModel>& models,
                                 const Eigen::MatrixXd& X_candidates, int n_samples,
                                 std::uint64_t seed) {
  const int n_models = static_cast<int>(models.size());
  const int n_cand = static_cast<int>(X_candidates.rows());
  for (const auto& m : models) {
    if (m.dim() != X_candidates.cols()) {
      throw std::invalid_argument("sample_joint: candidate dimension mismatch");
    }
  }

  std::vector<double> out(static_cast<size_t>(n_samples) * n_cand * n_models);
  for (int mi = 0; mi < n_models; ++mi) {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    models[mi].joint_posterior(X_candidates, mean, cov);

    // Posterior spread at or below round-off is a degenerate distribution:
    // every sample equals the mean, so EHVI collapses to HVI exactly.
    const double prior_scale =
        models[mi].hyper().signal_var * models[mi].output_std() * models[mi].output_std();
    const bool degenerate = cov.diagonal().maxCoeff() <= 1e-12 * prior_scale;

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_cand, n_cand);
    if (!degenerate) {
      const double scale = std::max(cov.diagonal().maxCoeff(), 1e-300);
      Eigen::LLT<Eigen::MatrixXd> llt;
      bool ok = false;
      for (double jitter = 1e-12; jitter <= 1e-4 + 1e-16; jitter *= 10.0) {
        Eigen::MatrixXd Cj = cov;
        Cj.diagonal().array() += jitter * scale;
        llt.compute(Cj);
        if (llt.info() == Eigen::Success) {
          ok = true;
          break;
        }
      }
      if (!ok) throw NumericalFailure("sample_joint: posterior covariance not PSD");
      L = llt.matrixL();
    }

    rng::Stream stream(rng::derive_seed(seed, static_cast<std::uint64_t>(mi), 0x5a));
    Eigen::VectorXd z(n_cand);
    for (int s = 0; s < n_samples; ++s) {
      for (int c = 0; c < n_cand; ++c) z(c) = stream.gaussian();
      const Eigen::VectorXd draw = degenerate ? mean : (mean + L * z).eval();
      for (int c = 0; c < n_cand; ++c) {
        out[(static_cast<size_t>(s) * n_cand + c) * n_models + mi] = draw(c);
      }
    }
  }
  return out;
}

}  // namespace stemtune
