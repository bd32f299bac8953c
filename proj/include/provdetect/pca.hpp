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

#ifndef PROVDETECT_PCA_HPP_
#define PROVDETECT_PCA_HPP_

// PCA anomaly detector: keep the fewest principal axes whose cumulative
// explained variance reaches the threshold, score by the squared residual to
// the retained subspace.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"

namespace provdetect {

struct PCAModel {
  Vector mean;
  Matrix axes;  // k x d, one unit axis per row, descending variance
  std::vector<double> explained_variance;  // retained axes only
  double total_variance = 0.0;

  std::size_t components() const { return explained_variance.size(); }
};

inline PCAModel pca_fit(const Matrix& train, double variance_threshold = 0.95) {
  if (train.rows() < 2) throw Error(Errc::kEmptyTrainingSet, "PCA needs at least 2 rows");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw Error(Errc::kInvalidConfig, "variance threshold must lie in (0, 1]");
  }
  PCAModel model;
  model.mean = train.colwise().mean().transpose();
  const Matrix centered = train.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(train.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::kConvergenceFailure, "covariance eigensolver failed");
  }
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  model.total_variance = values.sum();
  if (!(model.total_variance > 0.0)) {
    throw Error(Errc::kDegenerateData, "training data has zero variance");
  }

  std::size_t k = 0;
  double cumulative = 0.0;
  while (k < static_cast<std::size_t>(values.size())) {
    cumulative += values(static_cast<Eigen::Index>(k));
    ++k;
    if (cumulative / model.total_variance >= variance_threshold - 1e-12) break;
  }

  model.axes.resize(static_cast<Eigen::Index>(k), train.cols());
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd axis = vectors.col(static_cast<Eigen::Index>(c));
    // Sign convention: the largest-magnitude entry is positive.
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    model.axes.row(static_cast<Eigen::Index>(c)) = axis.transpose();
    model.explained_variance.push_back(values(static_cast<Eigen::Index>(c)));
  }
  return model;
}

// ||(x - mean) - P^T P (x - mean)||^2 per row.
inline std::vector<double> pca_score(const PCAModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(Errc::kDimensionMismatch,
                "PCA expects " + std::to_string(model.mean.size()) + " columns");
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector c = x.row(i).transpose() - model.mean;
    const Vector proj = model.axes * c;
    const Vector residual = c - model.axes.transpose() * proj;
    out[static_cast<std::size_t>(i)] = residual.squaredNorm();
  }
  return out;
}

// "PCA1\n" + JSON header + little-endian float64: mean, explained variances,
// axes row-major.
inline std::string serialize_pca(const PCAModel& m) {
  nlohmann::ordered_json header;
  header["dim"] = m.mean.size();
  header["components"] = m.components();
  header["total_variance"] = m.total_variance;
  header["dtype"] = "f64le";
  std::string payload;
  for (Eigen::Index j = 0; j < m.mean.size(); ++j) detail::append_f64_le(payload, m.mean(j));
  for (double v : m.explained_variance) detail::append_f64_le(payload, v);
  for (Eigen::Index i = 0; i < m.axes.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.axes.cols(); ++j) {
      detail::append_f64_le(payload, m.axes(i, j));
    }
  }
  return "PCA1\n" + header.dump() + "\n" + payload;
}

inline PCAModel deserialize_pca(std::string_view bytes) {
  auto [header, payload] = detail::split_container(bytes, "PCA1", Errc::kParseError);
  PCAModel m;
  Eigen::Index dim = 0;
  std::size_t k = 0;
  try {
    dim = header.at("dim").get<Eigen::Index>();
    k = header.at("components").get<std::size_t>();
    m.total_variance = header.at("total_variance").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, e.what());
  }
  const auto d = static_cast<std::size_t>(dim);
  if (payload.size() != 8 * (d + k + k * d)) {
    throw Error(Errc::kParseError, "PCA payload size mismatch");
  }
  const char* p = payload.data();
  m.mean.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j, p += 8) m.mean(j) = detail::read_f64_le(p);
  for (std::size_t c = 0; c < k; ++c, p += 8) m.explained_variance.push_back(detail::read_f64_le(p));
  m.axes.resize(static_cast<Eigen::Index>(k), dim);
  for (Eigen::Index i = 0; i < m.axes.rows(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j, p += 8) m.axes(i, j) = detail::read_f64_le(p);
  }
  return m;
}

}  // namespace provdetect

#endif  // PROVDETECT_PCA_HPP_
