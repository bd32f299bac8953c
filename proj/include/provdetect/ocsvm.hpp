/*
 * Copyright 2026 The provdetect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PROVDETECT_OCSVM_HPP_
#define PROVDETECT_OCSVM_HPP_

// One-class SVM with an RBF kernel, solved in the dual
//
//   min_a  1/2 a^T K a   s.t.  0 <= a_i <= 1/(nu n),  sum_i a_i = 1
//
// by pairwise coordinate descent with second-order working-set selection.
// Decision f(x) = sum_i a_i K(x_i, x) - rho; the anomaly score is -f(x).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"

namespace provdetect {

struct OCSVMConfig {
  double nu = 0.01;
  std::optional<double> gamma;  // unset: 1 / n_features
  double tolerance = 1e-4;      // max KKT violation at convergence
  std::int64_t max_iterations = 0;  // 0: max(10^7, 100 n)
  std::size_t cache_bytes = std::size_t{256} << 20;
};

struct OCSVMModel {
  Matrix support_vectors;
  std::vector<double> alpha;  // coefficient of each support vector
  double rho = 0.0;
  double gamma = 0.0;
  double nu = 0.0;
  std::size_t n_train = 0;
  double kkt_violation = 0.0;
  std::int64_t iterations = 0;
};

inline double rbf_kernel(const Vector& a, const Vector& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

namespace ocsvm_detail {

// Lazily computed kernel rows with an LRU bound.
class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma, std::size_t cache_bytes)
      : x_(x), gamma_(gamma), sq_(x.rowwise().squaredNorm()) {
    const std::size_t row_bytes = static_cast<std::size_t>(x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, cache_bytes / std::max<std::size_t>(row_bytes, 1));
  }

  const std::vector<double>& row(Eigen::Index i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> values(static_cast<std::size_t>(x_.rows()));
    const Vector dots = x_ * x_.row(i).transpose();
    for (Eigen::Index t = 0; t < x_.rows(); ++t) {
      const double d2 = std::max(0.0, sq_(t) + sq_(i) - 2.0 * dots(t));
      values[static_cast<std::size_t>(t)] = t == i ? 1.0 : std::exp(-gamma_ * d2);
    }
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  const Matrix& x_;
  double gamma_;
  Vector sq_;
  std::size_t capacity_;
  std::list<std::pair<Eigen::Index, std::vector<double>>> lru_;
  std::unordered_map<Eigen::Index,
                     std::list<std::pair<Eigen::Index, std::vector<double>>>::iterator>
      index_;
};

// rho from the KKT conditions: the mean gradient over free coefficients, or
// the midpoint of the feasible interval when none are free.
inline double compute_rho(const std::vector<double>& alpha,
                          const std::vector<double>& grad, double upper) {
  double free_sum = 0.0;
  std::size_t n_free = 0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    if (alpha[t] <= 0.0) {
      ub = std::min(ub, grad[t]);
    } else if (alpha[t] >= upper) {
      lb = std::max(lb, grad[t]);
    } else {
      free_sum += grad[t];
      ++n_free;
    }
  }
  if (n_free > 0) return free_sum / static_cast<double>(n_free);
  if (!std::isfinite(lb)) return ub;
  if (!std::isfinite(ub)) return lb;
  return 0.5 * (lb + ub);
}

// Clamp into the box, then push the sum back to exactly 1 through the
// coefficients with room to move.
inline void project_feasible(std::vector<double>& alpha, double upper) {
  for (double& a : alpha) a = std::clamp(a, 0.0, upper);
  double residual = 1.0 - std::accumulate(alpha.begin(), alpha.end(), 0.0);
  for (int pass = 0; pass < 3 && residual != 0.0; ++pass) {
    for (double& a : alpha) {
      if (residual == 0.0) break;
      if (residual > 0.0 && a > 0.0 && a < upper) {
        const double step = std::min(residual, upper - a);
        a += step;
        residual -= step;
      } else if (residual < 0.0 && a > 0.0) {
        const double step = std::min(-residual, a);
        a -= step;
        residual += step;
      }
    }
    residual = 1.0 - std::accumulate(alpha.begin(), alpha.end(), 0.0);
  }
}

}  // namespace ocsvm_detail

inline OCSVMModel ocsvm_fit(const Matrix& train, const OCSVMConfig& cfg = {}) {
  const auto n = static_cast<std::size_t>(train.rows());
  if (n == 0) throw Error(Errc::kEmptyTrainingSet, "one-class SVM needs training rows");
  if (!(cfg.nu > 0.0 && cfg.nu <= 1.0)) {
    throw Error(Errc::kInvalidConfig, "nu must lie in (0, 1]", "nu");
  }
  OCSVMModel model;
  model.nu = cfg.nu;
  model.n_train = n;
  model.gamma = cfg.gamma.value_or(1.0 / static_cast<double>(train.cols()));
  const double upper = 1.0 / (cfg.nu * static_cast<double>(n));

  // Start from the first floor(nu n) coefficients at the bound and the
  // remainder on the next one.
  std::vector<double> alpha(n, 0.0);
  double remaining = 1.0;
  for (std::size_t t = 0; t < n && remaining > 0.0; ++t) {
    alpha[t] = std::min(upper, remaining);
    remaining -= alpha[t];
  }

  ocsvm_detail::KernelRows kernel(train, model.gamma, cfg.cache_bytes);
  std::vector<double> grad(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (alpha[s] == 0.0) continue;
    const auto& ks = kernel.row(static_cast<Eigen::Index>(s));
    for (std::size_t t = 0; t < n; ++t) grad[t] += alpha[s] * ks[t];
  }

  const std::int64_t max_iter =
      cfg.max_iterations > 0
          ? cfg.max_iterations
          : std::max<std::int64_t>(10'000'000, 100 * static_cast<std::int64_t>(n));
  constexpr double kTau = 1e-12;
  std::int64_t iter = 0;
  double violation = 0.0;
  for (;; ++iter) {
    // i: lowest gradient among coefficients that may grow.
    std::size_t i = n;
    double g_min_up = std::numeric_limits<double>::infinity();
    double g_max_low = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] < upper && grad[t] < g_min_up) {
        g_min_up = grad[t];
        i = t;
      }
      if (alpha[t] > 0.0) g_max_low = std::max(g_max_low, grad[t]);
    }
    violation = (i == n) ? 0.0 : std::max(0.0, g_max_low - g_min_up);
    if (violation < cfg.tolerance) break;
    if (iter >= max_iter) {
      throw Error(Errc::kConvergenceFailure,
                  "no convergence after " + std::to_string(iter) +
                      " iterations, KKT violation " + std::to_string(violation));
    }
    const std::vector<double> ki = kernel.row(static_cast<Eigen::Index>(i));
    // j: second-order choice among coefficients that may shrink.
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] <= 0.0) continue;
      const double b = grad[t] - g_min_up;
      if (b <= 0.0) continue;
      double a = 2.0 - 2.0 * ki[t];
      if (a <= 0.0) a = kTau;
      const double obj = -(b * b) / a;
      if (obj < best) {
        best = obj;
        j = t;
      }
    }
    if (j == n) break;
    const auto& kj = kernel.row(static_cast<Eigen::Index>(j));
    double quad = 2.0 - 2.0 * ki[j];
    if (quad <= 0.0) quad = kTau;
    double delta = (grad[j] - grad[i]) / quad;
    delta = std::min({delta, upper - alpha[i], alpha[j]});
    if (delta <= 0.0) break;
    alpha[i] += delta;
    alpha[j] -= delta;
    if (upper - alpha[i] < 1e-15 * upper) alpha[i] = upper;
    if (alpha[j] < 1e-15 * upper) alpha[j] = 0.0;
    for (std::size_t t = 0; t < n; ++t) grad[t] += delta * (ki[t] - kj[t]);
  }

  ocsvm_detail::project_feasible(alpha, upper);
  model.rho = ocsvm_detail::compute_rho(alpha, grad, upper);
  model.kkt_violation = violation;
  model.iterations = iter;

  std::vector<Eigen::Index> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      sv.push_back(static_cast<Eigen::Index>(t));
      model.alpha.push_back(alpha[t]);
    }
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), train.cols());
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = train.row(sv[s]);
  }
  return model;
}

// f(x) for every row of x.
inline std::vector<double> ocsvm_decision(const OCSVMModel& model, const Matrix& x) {
  if (x.cols() != model.support_vectors.cols()) {
    throw Error(Errc::kDimensionMismatch,
                "one-class SVM expects " + std::to_string(model.support_vectors.cols()) +
                    " columns");
  }
  const Vector sv_sq = model.support_vectors.rowwise().squaredNorm();
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector dots = model.support_vectors * x.row(r).transpose();
    const double xsq = x.row(r).squaredNorm();
    double f = 0.0;
    for (Eigen::Index s = 0; s < dots.size(); ++s) {
      const double d2 = std::max(0.0, sv_sq(s) + xsq - 2.0 * dots(s));
      f += model.alpha[static_cast<std::size_t>(s)] * std::exp(-model.gamma * d2);
    }
    out[static_cast<std::size_t>(r)] = f - model.rho;
  }
  return out;
}

// Higher = more anomalous.
inline std::vector<double> ocsvm_score(const OCSVMModel& model, const Matrix& x) {
  std::vector<double> f = ocsvm_decision(model, x);
  for (double& v : f) v = -v;
  return f;
}

// "OCS1\n" + JSON header + little-endian float64: alpha, then support vectors
// row-major.
inline std::string serialize_ocsvm(const OCSVMModel& m) {
  nlohmann::ordered_json header;
  header["n_sv"] = m.alpha.size();
  header["dim"] = m.support_vectors.cols();
  header["rho"] = m.rho;
  header["gamma"] = m.gamma;
  header["nu"] = m.nu;
  header["n_train"] = m.n_train;
  header["kkt_violation"] = m.kkt_violation;
  header["iterations"] = m.iterations;
  header["dtype"] = "f64le";
  std::string payload;
  for (double a : m.alpha) detail::append_f64_le(payload, a);
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.support_vectors.cols(); ++j) {
      detail::append_f64_le(payload, m.support_vectors(i, j));
    }
  }
  return "OCS1\n" + header.dump() + "\n" + payload;
}

inline OCSVMModel deserialize_ocsvm(std::string_view bytes) {
  auto [header, payload] = detail::split_container(bytes, "OCS1", Errc::kParseError);
  OCSVMModel m;
  std::size_t n_sv = 0;
  Eigen::Index dim = 0;
  try {
    n_sv = header.at("n_sv").get<std::size_t>();
    dim = header.at("dim").get<Eigen::Index>();
    m.rho = header.at("rho").get<double>();
    m.gamma = header.at("gamma").get<double>();
    m.nu = header.at("nu").get<double>();
    m.n_train = header.at("n_train").get<std::size_t>();
    m.kkt_violation = header.at("kkt_violation").get<double>();
    m.iterations = header.at("iterations").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, e.what());
  }
  if (payload.size() != 8 * (n_sv + n_sv * static_cast<std::size_t>(dim))) {
    throw Error(Errc::kParseError, "OC-SVM payload size mismatch");
  }
  const char* p = payload.data();
  for (std::size_t s = 0; s < n_sv; ++s, p += 8) m.alpha.push_back(detail::read_f64_le(p));
  m.support_vectors.resize(static_cast<Eigen::Index>(n_sv), dim);
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j, p += 8) {
      m.support_vectors(i, j) = detail::read_f64_le(p);
    }
  }
  return m;
}

}  // namespace provdetect

#endif  // PROVDETECT_OCSVM_HPP_
