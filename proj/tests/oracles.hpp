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

#ifndef PROVDETECT_TESTS_ORACLES_HPP_
#define PROVDETECT_TESTS_ORACLES_HPP_

// Reference computations for the tests. Everything here is written with plain
// loops over std::vector and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace provdetect::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows of equal length

// ---------------------------------------------------------------------------
// Dense autoencoder: x -> relu(x W0 + b0) -> ... -> identity output.

struct Net {
  std::vector<int> widths;
  std::vector<Mat> w;  // w[l][i][j], fan_in x fan_out
  std::vector<Vec> b;
};

inline Mat forward(const Net& net, const Mat& x) {
  Mat a = x;
  const std::size_t layers = net.w.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Mat z(a.size(), Vec(net.b[l].size(), 0.0));
    for (std::size_t r = 0; r < a.size(); ++r) {
      for (std::size_t j = 0; j < net.b[l].size(); ++j) {
        double s = net.b[l][j];
        for (std::size_t i = 0; i < a[r].size(); ++i) s += a[r][i] * net.w[l][i][j];
        z[r][j] = (l + 1 < layers) ? std::max(s, 0.0) : s;
      }
    }
    a = std::move(z);
  }
  return a;
}

inline double mse(const Net& net, const Mat& x) {
  const Mat y = forward(net, x);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t j = 0; j < x[r].size(); ++j, ++n) s += (y[r][j] - x[r][j]) * (y[r][j] - x[r][j]);
  }
  return s / static_cast<double>(n);
}

// Central difference of the batch MSE with respect to one parameter.
template <typename Access>
double central_difference(Net net, const Mat& x, Access param, double h) {
  double& p = param(net);
  const double saved = p;
  p = saved + h;
  const double up = mse(net, x);
  p = saved - h;
  const double down = mse(net, x);
  p = saved;
  return (up - down) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// AUC by exhaustive pair counting.

inline double brute_force_auc(const Vec& scores, const std::vector<int>& labels) {
  double concordant = 0.0;
  double ties = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) concordant += 1.0;
      if (scores[i] == scores[j]) ties += 1.0;
    }
  }
  return (concordant + 0.5 * ties) / pairs;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenpairs are
// returned with eigenvalues descending; vectors[k] is the k-th eigenvector.

struct Eigen {
  Vec values;
  Mat vectors;
};

inline Eigen jacobi(Mat a, double tol = 1e-12, int max_sweeps = 200) {
  const std::size_t n = a.size();
  Mat v(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale += a[i][i] * a[i][i];
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (std::sqrt(off) <= tol * std::max(1.0, std::sqrt(scale))) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
  Eigen out;
  for (std::size_t k : order) {
    out.values.push_back(a[k][k]);
    Vec vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v[i][k];
    out.vectors.push_back(vec);
  }
  return out;
}

inline Mat sample_covariance(const Mat& x) {
  const std::size_t n = x.size();
  const std::size_t d = x[0].size();
  Vec mean(d, 0.0);
  for (const auto& r : x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  }
  Mat c(d, Vec(d, 0.0));
  for (const auto& r : x) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// One-class SVM dual by projected gradient descent:
//   min 1/2 a'Ka  s.t.  0 <= a_i <= upper,  sum a = 1.

inline double rbf(const Vec& a, const Vec& b, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * s);
}

// Euclidean projection onto {0 <= a <= upper, sum a = 1} by bisection on the
// shift lambda in a_i = clamp(y_i - lambda, 0, upper).
inline Vec project_capped_simplex(const Vec& y, double upper) {
  double lo = *std::min_element(y.begin(), y.end()) - upper - 1.0;
  double hi = *std::max_element(y.begin(), y.end()) + 1.0;
  auto mass = [&](double lambda) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - lambda, 0.0, upper);
    return s;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::clamp(y[i] - 0.5 * (lo + hi), 0.0, upper);
  return out;
}

struct OneClassSolution {
  Vec alpha;
  double rho = 0.0;
};

inline OneClassSolution one_class_qp(const Mat& x, double nu, double gamma, double tol = 1e-8,
                                     int max_iter = 2000000) {
  const std::size_t n = x.size();
  const double upper = 1.0 / (nu * static_cast<double>(n));
  Mat k(n, Vec(n));
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      k[i][j] = rbf(x[i], x[j], gamma);
      row += std::abs(k[i][j]);
    }
    lipschitz = std::max(lipschitz, row);
  }
  const double step = 1.0 / lipschitz;
  Vec a = project_capped_simplex(Vec(n, 1.0 / static_cast<double>(n)), upper);
  Vec g(n);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) g[i] += k[i][j] * a[j];
    }
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - step * g[i];
    Vec next = project_capped_simplex(y, upper);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - a[i]));
    a = std::move(next);
    if (change < tol * step) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = 0.0;
    for (std::size_t j = 0; j < n; ++j) g[i] += k[i][j] * a[j];
  }
  // rho: mean gradient over free multipliers, else midpoint of the feasible band.
  const double eps = 1e-6 * upper;
  double sum = 0.0;
  int free = 0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] > eps && a[i] < upper - eps) {
      sum += g[i];
      ++free;
    } else if (a[i] <= eps) {
      ub = std::min(ub, g[i]);
    } else {
      lb = std::max(lb, g[i]);
    }
  }
  OneClassSolution s;
  s.alpha = a;
  s.rho = free > 0 ? sum / free : 0.5 * (lb + ub);
  return s;
}

inline double one_class_decision(const Mat& x, const OneClassSolution& s, double gamma,
                                 const Vec& q) {
  double f = -s.rho;
  for (std::size_t i = 0; i < x.size(); ++i) f += s.alpha[i] * rbf(x[i], q, gamma);
  return f;
}

// ---------------------------------------------------------------------------
// t-SNE conditional row: p_j|i proportional to exp(-beta d_ij^2). Returns the
// perplexity exp(H) with H in nats.

inline double row_perplexity(const Mat& x, std::size_t i, double beta) {
  Vec d2(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t c = 0; c < x[i].size(); ++c) d2[j] += (x[i][c] - x[j][c]) * (x[i][c] - x[j][c]);
  }
  double total = 0.0;
  Vec p(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    p[j] = std::exp(-beta * d2[j]);
    total += p[j];
  }
  double h = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i || p[j] == 0.0) continue;
    const double q = p[j] / total;
    h -= q * std::log(q);
  }
  return std::exp(h);
}

}  // namespace provdetect::oracle

#endif  // PROVDETECT_TESTS_ORACLES_HPP_
