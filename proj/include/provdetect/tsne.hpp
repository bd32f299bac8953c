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

#ifndef PROVDETECT_TSNE_HPP_
#define PROVDETECT_TSNE_HPP_

// Exact (O(n^2)) t-SNE to two dimensions.
//
// Per-point Gaussian precisions are bisected until exp(H(P_i)) matches the
// perplexity; P is symmetrized and normalized to sum 1. Optimization uses
// early exaggeration x12 for the first 100 iterations, learning rate 200,
// momentum 0.5 switching to 0.8 at iteration 250, and per-coordinate gains
// (+0.2 on sign flip, x0.8 otherwise, floor 0.01).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 500;
  std::uint64_t seed = 0;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  int exaggeration_iterations = 100;
  int momentum_switch = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  double perplexity_tolerance = 1e-5;
};

// Row-stochastic conditional affinities P(j|i) plus the fitted precisions.
struct ConditionalAffinities {
  Eigen::MatrixXd p;
  std::vector<double> beta;  // 1 / (2 sigma_i^2)
};

inline Eigen::MatrixXd squared_distances(const Matrix& x) {
  const Vector sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * (x * x.transpose());
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

// Entropy (nats) of the row distribution defined by precision beta.
inline double conditional_row(const Eigen::MatrixXd& d2, Eigen::Index i, double beta,
                              Eigen::Ref<Eigen::RowVectorXd> row) {
  const Eigen::Index n = d2.rows();
  // Shift by the nearest-neighbour distance for numerical stability.
  double min_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) min_d = std::min(min_d, d2(i, j));
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    row(j) = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - min_d));
    sum += row(j);
  }
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    row(j) /= sum;
    if (row(j) > 0.0) entropy -= row(j) * std::log(row(j));
  }
  return entropy;
}

inline ConditionalAffinities conditional_affinities(const Matrix& x, double perplexity,
                                                    double tolerance = 1e-5) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd d2 = squared_distances(x);
  ConditionalAffinities out{Eigen::MatrixXd::Zero(n, n), std::vector<double>(static_cast<std::size_t>(n))};
  const double target = std::log(perplexity);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    Eigen::RowVectorXd row(n);
    for (int step = 0; step < 200; ++step) {
      const double h = conditional_row(d2, i, beta, row);
      if (std::abs(std::exp(h) - perplexity) < tolerance) break;
      if (h > target) {  // too flat: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    conditional_row(d2, i, beta, row);
    out.p.row(i) = row;
    out.beta[static_cast<std::size_t>(i)] = beta;
  }
  return out;
}

// P_ij = (P(j|i) + P(i|j)) / (2n).
inline Eigen::MatrixXd joint_affinities(const ConditionalAffinities& cond) {
  const auto n = static_cast<double>(cond.p.rows());
  Eigen::MatrixXd p = (cond.p + cond.p.transpose()) / (2.0 * n);
  return p;
}

inline void check_tsne_input(Eigen::Index n, double perplexity) {
  if (n < 4) throw Error(Errc::kInvalidConfig, "t-SNE needs at least 4 points");
  if (!(perplexity > 0.0) || perplexity > static_cast<double>(n - 1) / 3.0) {
    throw Error(Errc::kPerplexityTooLarge,
                "perplexity " + std::to_string(perplexity) + " exceeds (n-1)/3 for n=" +
                    std::to_string(n));
  }
}

// n x 2 output coordinates.
inline Matrix tsne(const Matrix& x, const TsneConfig& cfg = {}) {
  const Eigen::Index n = x.rows();
  check_tsne_input(n, cfg.perplexity);
  const Eigen::MatrixXd p =
      joint_affinities(conditional_affinities(x, cfg.perplexity, cfg.perplexity_tolerance));

  Rng rng(cfg.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  for (int it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;

    double num_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double dx = y(i, 0) - y(j, 0);
        const double dy = y(i, 1) - y(j, 1);
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num(i, j) = v;
        num(j, i) = v;
        num_sum += 2.0 * v;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = (exaggeration * p(i, j) - num(i, j) / num_sum) * num(i, j);
        gx += w * (y(i, 0) - y(j, 0));
        gy += w * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool flip = (grad(i, c) > 0.0) != (velocity(i, c) > 0.0);
        gains(i, c) = flip ? gains(i, c) + 0.2 : gains(i, c) * 0.8;
        gains(i, c) = std::max(gains(i, c), 0.01);
        velocity(i, c) = momentum * velocity(i, c) - cfg.learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += velocity(i, c);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

}  // namespace provdetect

#endif  // PROVDETECT_TSNE_HPP_
