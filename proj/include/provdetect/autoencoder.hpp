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

#ifndef PROVDETECT_AUTOENCODER_HPP_
#define PROVDETECT_AUTOENCODER_HPP_

// Dense autoencoder with hand-written backpropagation and Adam.
//
// Layer l maps width[l] -> width[l+1] as  a' = act(a * W_l + b_l)  where
// W_l is (width[l] x width[l+1]). Every layer but the last uses ReLU (with
// derivative 0 at 0); the output layer is the identity. The loss is the mean
// over all n*d entries of the squared reconstruction residual.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {

struct AEArchitecture {
  std::vector<int> widths = {768, 512, 128, 512, 768};

  static AEArchitecture for_dim(int dim) {
    AEArchitecture a;
    a.widths.front() = dim;
    a.widths.back() = dim;
    return a;
  }

  int input_dim() const { return widths.front(); }
  std::size_t num_layers() const { return widths.size() - 1; }

  void validate() const {
    if (widths.size() < 3 || widths.size() % 2 == 0) {
      throw Error(Errc::kInvalidConfig,
                  "autoencoder needs an odd number (>= 3) of widths", "widths");
    }
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 1) throw Error(Errc::kInvalidConfig, "width < 1", "widths");
      if (widths[i] != widths[widths.size() - 1 - i]) {
        throw Error(Errc::kInvalidConfig,
                    "widths must be symmetric about the latent layer", "widths");
      }
    }
  }
};

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Per-layer weights and biases. Also used for gradients and Adam moments.
template <typename Scalar>
struct AEParams {
  std::vector<DenseMatrix<Scalar>> weights;
  std::vector<RowVector<Scalar>> biases;

  static AEParams zeros_like(const AEArchitecture& arch) {
    AEParams p;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
      p.weights.push_back(DenseMatrix<Scalar>::Zero(arch.widths[l], arch.widths[l + 1]));
      p.biases.push_back(RowVector<Scalar>::Zero(arch.widths[l + 1]));
    }
    return p;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    }
    return n;
  }
};

template <typename Scalar>
struct AEModel {
  AEArchitecture arch;
  AEParams<Scalar> params;
  std::uint64_t init_seed = 0;
  int epochs_trained = 0;
};

using AEModelF = AEModel<float>;
using AEModelD = AEModel<double>;

// Glorot-uniform weights in (-a, a), a = sqrt(6 / (fan_in + fan_out)); zero
// biases. Draw order: layer by layer, row-major within each weight matrix.
template <typename Scalar>
AEModel<Scalar> init_autoencoder(const AEArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  AEModel<Scalar> model;
  model.arch = arch;
  model.init_seed = seed;
  model.params = AEParams<Scalar>::zeros_like(arch);
  Rng rng(seed);
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const double a = std::sqrt(6.0 / (arch.widths[l] + arch.widths[l + 1]));
    auto& w = model.params.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = static_cast<Scalar>(rng.uniform(-a, a));
      }
    }
  }
  return model;
}

namespace ae_detail {

template <typename Scalar>
DenseMatrix<Scalar> to_dense(const Matrix& m) {
  return m.cast<Scalar>();
}

template <typename Scalar>
void check_dim(const AEModel<Scalar>& model, Eigen::Index cols) {
  if (cols != model.arch.input_dim()) {
    throw Error(Errc::kDimensionMismatch,
                "input has " + std::to_string(cols) + " columns, model expects " +
                    std::to_string(model.arch.input_dim()));
  }
}

// activations[0] = x, activations[L] = reconstruction.
template <typename Scalar>
std::vector<DenseMatrix<Scalar>> forward_all(const AEModel<Scalar>& model,
                                             const DenseMatrix<Scalar>& x) {
  const std::size_t layers = model.arch.num_layers();
  std::vector<DenseMatrix<Scalar>> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    DenseMatrix<Scalar> z = acts.back() * model.params.weights[l];
    z.rowwise() += model.params.biases[l];
    if (l + 1 < layers) z = z.cwiseMax(Scalar(0));
    acts.push_back(std::move(z));
  }
  return acts;
}

template <typename Scalar>
double mean_squared(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double d = static_cast<double>(a(i, j)) - static_cast<double>(b(i, j));
      s += d * d;
    }
  }
  return s / static_cast<double>(a.size());
}

template <typename Scalar>
AEParams<Scalar> backprop(const AEModel<Scalar>& model,
                          const DenseMatrix<Scalar>& x) {
  const std::size_t layers = model.arch.num_layers();
  const auto acts = forward_all(model, x);
  AEParams<Scalar> grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  const Scalar scale = Scalar(2) / static_cast<Scalar>(x.size());
  DenseMatrix<Scalar> g = (acts[layers] - x) * scale;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      g = (acts[l + 1].array() > Scalar(0)).select(g, Scalar(0));
    }
    grads.weights[l].noalias() = acts[l].transpose() * g;
    grads.biases[l] = g.colwise().sum();
    if (l > 0) {
      DenseMatrix<Scalar> prev = g * model.params.weights[l].transpose();
      g = std::move(prev);
    }
  }
  return grads;
}

}  // namespace ae_detail

template <typename Scalar>
struct ForwardResult {
  Matrix reconstruction;
  double mse = 0.0;
};

template <typename Scalar>
ForwardResult<Scalar> forward_mse(const AEModel<Scalar>& model, const Matrix& batch) {
  ae_detail::check_dim(model, batch.cols());
  const auto x = ae_detail::to_dense<Scalar>(batch);
  const auto acts = ae_detail::forward_all(model, x);
  ForwardResult<Scalar> out;
  out.reconstruction = acts.back().template cast<double>();
  out.mse = ae_detail::mean_squared(acts.back(), x);
  return out;
}

// Exact gradient of the batch MSE with respect to every weight and bias.
template <typename Scalar>
AEParams<Scalar> backprop_gradients(const AEModel<Scalar>& model, const Matrix& batch) {
  ae_detail::check_dim(model, batch.cols());
  if (batch.rows() == 0) {
    throw Error(Errc::kEmptyTrainingSet, "empty batch");
  }
  return ae_detail::backprop(model, ae_detail::to_dense<Scalar>(batch));
}

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AEParams<Scalar> m;
  AEParams<Scalar> v;
  std::int64_t t = 0;
  AdamConfig config;

  static AdamState for_model(const AEModel<Scalar>& model, AdamConfig cfg = {}) {
    AdamState s;
    s.m = AEParams<Scalar>::zeros_like(model.arch);
    s.v = AEParams<Scalar>::zeros_like(model.arch);
    s.config = cfg;
    return s;
  }
};

// Bias-corrected Adam update of one parameter block at step t (t >= 1).
template <typename Scalar>
void adam_update(std::span<Scalar> param, std::span<const Scalar> grad,
                 std::span<Scalar> m, std::span<Scalar> v, std::int64_t t,
                 const AdamConfig& cfg) {
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto eps = static_cast<Scalar>(cfg.epsilon);
  using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  Eigen::Map<Arr> p(param.data(), static_cast<Eigen::Index>(param.size()));
  Eigen::Map<const Arr> g(grad.data(), static_cast<Eigen::Index>(grad.size()));
  Eigen::Map<Arr> mm(m.data(), static_cast<Eigen::Index>(m.size()));
  Eigen::Map<Arr> vv(v.data(), static_cast<Eigen::Index>(v.size()));
  mm = b1 * mm + (Scalar(1) - b1) * g;
  vv = b2 * vv + (Scalar(1) - b2) * g.square();
  p -= lr * (mm / c1) / ((vv / c2).sqrt() + eps);
}

template <typename Scalar>
void adam_step(AEModel<Scalar>& model, AdamState<Scalar>& state,
               const AEParams<Scalar>& grads) {
  ++state.t;
  auto as_span = [](auto& x) { return std::span(x.data(), static_cast<std::size_t>(x.size())); };
  auto as_cspan = [](const auto& x) {
    return std::span<const Scalar>(x.data(), static_cast<std::size_t>(x.size()));
  };
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    adam_update<Scalar>(as_span(model.params.weights[l]), as_cspan(grads.weights[l]),
                        as_span(state.m.weights[l]), as_span(state.v.weights[l]),
                        state.t, state.config);
    adam_update<Scalar>(as_span(model.params.biases[l]), as_cspan(grads.biases[l]),
                        as_span(state.m.biases[l]), as_span(state.v.biases[l]),
                        state.t, state.config);
  }
}

struct TrainConfig {
  int epochs = 15;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  AdamConfig adam;

  void validate() const {
    if (epochs < 1) throw Error(Errc::kInvalidConfig, "epochs must be >= 1", "epochs");
    if (batch_size < 1) {
      throw Error(Errc::kInvalidConfig, "batch_size must be >= 1", "batch_size");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw Error(Errc::kInvalidConfig, "validation_fraction must lie in [0,1)",
                  "validation_fraction");
    }
  }
};

// Post-epoch MSE over the internal train and held-out benign rows. val_mse is
// NaN when the hold-out is empty.
struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
};

namespace ae_detail {

template <typename Scalar>
double dataset_mse(const AEModel<Scalar>& model, const DenseMatrix<Scalar>& x) {
  if (x.rows() == 0) return std::nan("");
  constexpr Eigen::Index kChunk = 1024;
  double total = 0.0;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, x.rows() - start);
    const DenseMatrix<Scalar> chunk = x.middleRows(start, len);
    total += mean_squared(forward_all(model, chunk).back(), chunk) *
             static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(x.size());
}

}  // namespace ae_detail

// Trains on benign rows only. A seeded 90/10 (by default) hold-out provides
// the validation curve; every epoch reshuffles the rest and walks it in
// batches, the final partial batch included.
template <typename Scalar>
TrainHistory fit(AEModel<Scalar>& model, const Matrix& train, const TrainConfig& cfg) {
  cfg.validate();
  if (train.rows() == 0) throw Error(Errc::kEmptyTrainingSet, "no training rows");
  ae_detail::check_dim(model, train.cols());

  const auto n = static_cast<std::size_t>(train.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng holdout_rng(derive_seed(cfg.seed, "holdout"));
  holdout_rng.shuffle(std::span<std::size_t>(perm));
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * cfg.validation_fraction));
  if (n_val >= n) n_val = n - 1;
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> fit_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(fit_idx.begin(), fit_idx.end());

  const DenseMatrix<Scalar> x_fit = select_rows(train, fit_idx).template cast<Scalar>();
  const DenseMatrix<Scalar> x_val = select_rows(train, val_idx).template cast<Scalar>();

  AdamState<Scalar> adam = AdamState<Scalar>::for_model(model, cfg.adam);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<Eigen::Index> order(fit_idx.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  DenseMatrix<Scalar> xb;

  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<Eigen::Index>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      xb.resize(static_cast<Eigen::Index>(len), x_fit.cols());
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x_fit.row(order[start + i]);
      }
      adam_step(model, adam, ae_detail::backprop(model, xb));
    }
    ++model.epochs_trained;
    history.train_mse.push_back(ae_detail::dataset_mse(model, x_fit));
    history.val_mse.push_back(ae_detail::dataset_mse(model, x_val));
  }
  return history;
}

// Per-row reconstruction MSE. Rows are pushed through the network one at a
// time, so a row's score never depends on what else is in the matrix.
template <typename Scalar>
std::vector<double> score(const AEModel<Scalar>& model, const Matrix& m) {
  ae_detail::check_dim(model, m.cols());
  const std::size_t layers = model.arch.num_layers();
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  RowVector<Scalar> x;
  RowVector<Scalar> a;
  RowVector<Scalar> z;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    x = m.row(i).template cast<Scalar>();
    a = x;
    for (std::size_t l = 0; l < layers; ++l) {
      z.noalias() = a * model.params.weights[l];
      z += model.params.biases[l];
      if (l + 1 < layers) z = z.cwiseMax(Scalar(0));
      a.swap(z);
    }
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double d = static_cast<double>(a(j)) - static_cast<double>(x(j));
      s += d * d;
    }
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(x.size());
  }
  return out;
}

// Checkpoint: "AEM1\n", JSON header line, then little-endian float32 values,
// layer-major; per layer the weight matrix (row-major, fan_in x fan_out)
// followed by the bias.
template <typename Scalar>
std::string serialize_model(const AEModel<Scalar>& model) {
  nlohmann::ordered_json header;
  header["widths"] = model.arch.widths;
  header["seed"] = model.init_seed;
  header["epochs"] = model.epochs_trained;
  header["dtype"] = "f32le";
  std::string out = "AEM1\n" + header.dump() + "\n";
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    const auto& w = model.params.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        detail::append_f32_le(out, static_cast<float>(w(i, j)));
      }
    }
    const auto& b = model.params.biases[l];
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      detail::append_f32_le(out, static_cast<float>(b(j)));
    }
  }
  return out;
}

template <typename Scalar>
AEModel<Scalar> deserialize_model(std::string_view bytes) {
  auto [header, payload] = detail::split_container(bytes, "AEM1", Errc::kParseError);
  AEModel<Scalar> model;
  try {
    model.arch.widths = header.at("widths").get<std::vector<int>>();
    model.init_seed = header.at("seed").get<std::uint64_t>();
    model.epochs_trained = header.at("epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, std::string("bad checkpoint header: ") + e.what());
  }
  model.arch.validate();
  model.params = AEParams<Scalar>::zeros_like(model.arch);
  if (payload.size() != model.params.size() * 4) {
    throw Error(Errc::kParseError, "checkpoint payload size mismatch");
  }
  const char* p = payload.data();
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    auto& w = model.params.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j, p += 4) {
        w(i, j) = static_cast<Scalar>(detail::read_f32_le(p));
      }
    }
    auto& b = model.params.biases[l];
    for (Eigen::Index j = 0; j < b.size(); ++j, p += 4) {
      b(j) = static_cast<Scalar>(detail::read_f32_le(p));
    }
  }
  return model;
}

template <typename Scalar>
void save_model(const AEModel<Scalar>& model, const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize_model(model));
}

template <typename Scalar>
AEModel<Scalar> load_model(const std::filesystem::path& path) {
  return deserialize_model<Scalar>(detail::read_file(path));
}

}  // namespace provdetect

#endif  // PROVDETECT_AUTOENCODER_HPP_
