// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_SURROGATE_HPP
#define BILEVEL_BO_SURROGATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bilevel_bo/detail/nelder_mead.hpp"
#include "bilevel_bo/random.hpp"

namespace bbo {

class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernel matrix stayed non-positive-definite after jitter escalation.
class NumericalError : public SurrogateError {
 public:
  using SurrogateError::SurrogateError;
};

/// Matern 5/2 ARD hyperparameters, in standardized-output units.
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;

  static KernelParams isotropic(Eigen::Index dim, double lengthscale, double signal_variance, double noise_variance) {
    return {Eigen::VectorXd::Constant(dim, lengthscale), signal_variance, noise_variance};
  }

  bool valid() const {
    return lengthscales.size() > 0 && (lengthscales.array() > 0.0).all() && signal_variance > 0.0 &&
           noise_variance >= 0.0;
  }

  friend bool operator==(const KernelParams& a, const KernelParams& b) {
    return a.lengthscales.size() == b.lengthscales.size() && a.lengthscales == b.lengthscales &&
           a.signal_variance == b.signal_variance && a.noise_variance == b.noise_variance;
  }
};

/// Matern 5/2 correlation at scaled distance r (unit signal variance).
inline double matern52(double r) {
  const double s = std::sqrt(5.0) * r;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

/// Bounds and restart counts for marginal-likelihood fitting.
struct FitOptions {
  int starts = 8;
  int iterations = 200;
  double log_lengthscale_min = std::log(0.01);
  double log_lengthscale_max = std::log(10.0);
  double log_signal_min = std::log(0.01);
  double log_signal_max = std::log(100.0);
  double log_noise_min = std::log(1e-8);
  double log_noise_max = std::log(1.0);
  /// When set, the noise variance is held at this value instead of fitted.
  std::optional<double> fixed_noise;
};

namespace detail {

struct Standardization {
  double shift = 0.0;
  double scale = 1.0;
};

inline Standardization standardization(const Eigen::VectorXd& y) {
  Standardization s;
  const auto n = y.size();
  s.shift = y.mean();
  if (n < 2) return s;
  const double var = (y.array() - s.shift).square().sum() / static_cast<double>(n - 1);
  const double sd = std::sqrt(var);
  s.scale = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  return s;
}

inline void check_data(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs) {
  if (inputs.rows() == 0) throw SurrogateError("GP needs at least one observation");
  if (inputs.rows() != outputs.size())
    throw SurrogateError("GP data mismatch: " + std::to_string(inputs.rows()) + " inputs, " +
                         std::to_string(outputs.size()) + " outputs");
  if (inputs.cols() == 0) throw SurrogateError("GP inputs have zero dimension");
  if (!outputs.allFinite()) throw SurrogateError("GP outputs must be finite");
}

/// Per-dimension squared differences, reused across likelihood evaluations.
class PairwiseDiffs {
 public:
  explicit PairwiseDiffs(const Eigen::MatrixXd& x) : n_(x.rows()), sq_(static_cast<std::size_t>(x.cols())) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      auto& m = sq_[static_cast<std::size_t>(d)];
      m.resize(n_, n_);
      for (Eigen::Index j = 0; j < n_; ++j)
        for (Eigen::Index i = 0; i < n_; ++i) {
          const double diff = x(i, d) - x(j, d);
          m(i, j) = diff * diff;
        }
    }
  }

  Eigen::MatrixXd kernel(const KernelParams& k) const {
    Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(n_, n_);
    for (std::size_t d = 0; d < sq_.size(); ++d) {
      const double l = k.lengthscales(static_cast<Eigen::Index>(d));
      r2 += sq_[d].array() / (l * l);
    }
    const Eigen::ArrayXXd s = std::sqrt(5.0) * r2.sqrt();
    Eigen::MatrixXd K = (k.signal_variance * (1.0 + s + s.square() / 3.0) * (-s).exp()).matrix();
    // exact symmetry
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = j + 1; i < n_; ++i) K(j, i) = K(i, j);
    return K;
  }

 private:
  Eigen::Index n_;
  std::vector<Eigen::ArrayXXd> sq_;
};

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Cholesky of K + noise*I + jitter*I with jitter escalation
/// 1e-10 .. 1e-4 (relative to trace(K)/n).
inline Factorization factorize(const Eigen::MatrixXd& K, double noise) {
  const auto n = K.rows();
  const double base = K.trace() / static_cast<double>(n);
  for (double rel = 1e-10; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
    const double jitter = rel * base;
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    if (L.allFinite() && L.diagonal().minCoeff() > 0.0) return {std::move(L), jitter};
  }
  throw NumericalError("kernel matrix not positive definite after jitter escalation");
}

inline double lml_from(const Factorization& f, const Eigen::VectorXd& y) {
  const Eigen::VectorXd v = f.lower.triangularView<Eigen::Lower>().solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * v.squaredNorm() - f.lower.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

/// Fitted GP posterior over unit-cube inputs. Immutable; predict is thread-safe.
class GpModel {
 public:
  /// Condition on data with fixed kernel hyperparameters (no fitting).
  static GpModel condition(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs, const KernelParams& kernel) {
    detail::check_data(inputs, outputs);
    if (kernel.lengthscales.size() != inputs.cols())
      throw SurrogateError("kernel has " + std::to_string(kernel.lengthscales.size()) + " lengthscales, inputs have " +
                           std::to_string(inputs.cols()) + " dimensions");
    if (!kernel.valid()) throw SurrogateError("invalid kernel parameters");
    GpModel m;
    m.inputs_ = inputs;
    m.kernel_ = kernel;
    m.standard_ = detail::standardization(outputs);
    const Eigen::VectorXd y = (outputs.array() - m.standard_.shift) / m.standard_.scale;
    const detail::PairwiseDiffs diffs(inputs);
    auto f = detail::factorize(diffs.kernel(kernel), kernel.noise_variance);
    m.alpha_ = f.lower.triangularView<Eigen::Lower>().solve(y);
    f.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha_);
    m.lower_ = std::move(f.lower);
    m.jitter_ = f.jitter;
    return m;
  }

  Prediction predict(const Eigen::VectorXd& x) const {
    if (x.size() != inputs_.cols())
      throw SurrogateError("predict: query has " + std::to_string(x.size()) + " dimensions, model has " +
                           std::to_string(inputs_.cols()));
    const Eigen::VectorXd k = cross_kernel(x);
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd v = lower_.triangularView<Eigen::Lower>().solve(k);
    const double var = std::max(kernel_.signal_variance - v.squaredNorm(), 0.0);
    return {mean * standard_.scale + standard_.shift, std::sqrt(var) * standard_.scale};
  }

  /// Batched prediction; each column of `xs` is one query.
  std::vector<Prediction> predict_many(const Eigen::MatrixXd& xs) const {
    if (xs.rows() != inputs_.cols()) throw SurrogateError("predict: query dimension mismatch");
    const Eigen::Index n = inputs_.rows(), m = xs.cols();
    Eigen::MatrixXd K(n, m);
    for (Eigen::Index j = 0; j < m; ++j) K.col(j) = cross_kernel(xs.col(j));
    const Eigen::VectorXd means = K.transpose() * alpha_;
    lower_.triangularView<Eigen::Lower>().solveInPlace(K);
    const Eigen::VectorXd sq = K.colwise().squaredNorm().transpose();
    std::vector<Prediction> out(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double var = std::max(kernel_.signal_variance - sq(j), 0.0);
      out[static_cast<std::size_t>(j)] = {means(j) * standard_.scale + standard_.shift,
                                          std::sqrt(var) * standard_.scale};
    }
    return out;
  }

  Eigen::Index dimension() const { return inputs_.cols(); }
  Eigen::Index size() const { return inputs_.rows(); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const KernelParams& kernel() const { return kernel_; }
  const Eigen::MatrixXd& factor() const { return lower_; }
  double jitter() const { return jitter_; }
  double output_shift() const { return standard_.shift; }
  double output_scale() const { return standard_.scale; }

 private:
  GpModel() = default;

  Eigen::VectorXd cross_kernel(const Eigen::VectorXd& x) const {
    const Eigen::ArrayXd inv_l = kernel_.lengthscales.array().inverse();
    Eigen::VectorXd k(inputs_.rows());
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
      const double r = ((inputs_.row(i).transpose().array() - x.array()) * inv_l).matrix().norm();
      k(i) = kernel_.signal_variance * matern52(r);
    }
    return k;
  }

  Eigen::MatrixXd inputs_;
  KernelParams kernel_;
  detail::Standardization standard_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Exact Gaussian log marginal likelihood of the standardized outputs.
/// Throws NumericalError when the kernel matrix cannot be factorized.
inline double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                                      const KernelParams& kernel) {
  detail::check_data(inputs, outputs);
  if (kernel.lengthscales.size() != inputs.cols()) throw SurrogateError("kernel dimension mismatch");
  const auto s = detail::standardization(outputs);
  const Eigen::VectorXd y = (outputs.array() - s.shift) / s.scale;
  const detail::PairwiseDiffs diffs(inputs);
  return detail::lml_from(detail::factorize(diffs.kernel(kernel), kernel.noise_variance), y);
}

/// Maximize the log marginal likelihood over log-hyperparameters with
/// multi-start Nelder-Mead, then condition on the data. Deterministic in seed.
inline GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs, std::uint64_t seed,
                   const FitOptions& opts = {}) {
  detail::check_data(inputs, outputs);
  const Eigen::Index d = inputs.cols();
  const bool fit_noise = !opts.fixed_noise.has_value();
  const Eigen::Index p = d + 1 + (fit_noise ? 1 : 0);

  Eigen::VectorXd lower(p), upper(p);
  lower.head(d).setConstant(opts.log_lengthscale_min);
  upper.head(d).setConstant(opts.log_lengthscale_max);
  lower(d) = opts.log_signal_min;
  upper(d) = opts.log_signal_max;
  if (fit_noise) {
    lower(d + 1) = opts.log_noise_min;
    upper(d + 1) = opts.log_noise_max;
  }

  auto unpack = [&](const Eigen::VectorXd& theta) {
    KernelParams k;
    k.lengthscales = theta.head(d).array().exp();
    k.signal_variance = std::exp(theta(d));
    k.noise_variance = fit_noise ? std::exp(theta(d + 1)) : *opts.fixed_noise;
    return k;
  };

  const auto s = detail::standardization(outputs);
  const Eigen::VectorXd y = (outputs.array() - s.shift) / s.scale;
  const detail::PairwiseDiffs diffs(inputs);
  auto negative_lml = [&](const Eigen::VectorXd& theta) {
    const KernelParams k = unpack(theta);
    try {
      return -detail::lml_from(detail::factorize(diffs.kernel(k), k.noise_variance), y);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Rng rng(seed);
  detail::NelderMeadResult best;
  for (int start = 0; start < std::max(opts.starts, 1); ++start) {
    Eigen::VectorXd x0(p);
    if (start == 0) {
      x0.head(d).setConstant(std::log(0.3));
      x0(d) = 0.0;
      if (fit_noise) x0(d + 1) = std::log(1e-4);
    } else {
      for (Eigen::Index i = 0; i < p; ++i) x0(i) = rng.uniform(lower(i), upper(i));
    }
    auto r = detail::nelder_mead(negative_lml, x0, lower, upper, opts.iterations);
    if (r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value)) throw NumericalError("no finite marginal likelihood found while fitting GP");
  return GpModel::condition(inputs, outputs, unpack(best.x));
}

/// Convenience overload for row-per-observation std::vector data.
inline GpModel fit(const std::vector<Eigen::VectorXd>& inputs, const std::vector<double>& outputs, std::uint64_t seed,
                   const FitOptions& opts = {}) {
  if (inputs.empty()) throw SurrogateError("GP needs at least one observation");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(inputs.size()), inputs.front().size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != X.cols()) throw SurrogateError("GP inputs have inconsistent dimensions");
    X.row(static_cast<Eigen::Index>(i)) = inputs[i].transpose();
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outputs.data(), static_cast<Eigen::Index>(outputs.size()));
  return fit(X, y, seed, opts);
}

}  // namespace bbo

#endif  // BILEVEL_BO_SURROGATE_HPP
