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

#ifndef PROVDETECT_IFOREST_HPP_
#define PROVDETECT_IFOREST_HPP_

// Isolation forest. Each tree is grown on a seeded subsample of
// psi = min(256, n) rows with uniformly random split attributes and split
// values; the score is s(x) = 2^(-E[h(x)] / c(psi)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {

inline constexpr std::size_t kIForestMaxSamples = 256;

inline double harmonic_number(std::size_t k) {
  double h = 0.0;
  for (std::size_t i = k; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

// Average unsuccessful-search path length in a binary search tree of n keys:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(0) = c(1) = 0.
inline double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const auto m = static_cast<double>(n - 1);
  return 2.0 * harmonic_number(n - 1) - 2.0 * m / static_cast<double>(n);
}

struct IsolationNode {
  int attribute = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;  // training rows that reached this node

  bool leaf() const { return attribute < 0; }
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root
};

struct IForestModel {
  std::vector<IsolationTree> trees;
  std::size_t subsample = 0;
  int height_limit = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  // All training rows identical: every tree is a single leaf and every score
  // equals 0.5.
  bool degenerate = false;
};

namespace iforest_detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& data, Rng& rng, int height_limit)
      : data_(data), rng_(rng), height_limit_(height_limit) {}

  IsolationTree build(std::vector<Eigen::Index> rows) {
    IsolationTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(IsolationTree& tree, std::span<Eigen::Index> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(id)].size = static_cast<int>(rows.size());
    if (depth >= height_limit_ || rows.size() <= 1) return id;

    int attr = static_cast<int>(rng_.below(static_cast<std::uint64_t>(data_.cols())));
    auto [lo, hi] = range(rows, attr);
    if (lo == hi) {
      // Fall back to a uniform pick among the non-constant attributes.
      std::vector<int> live;
      for (int a = 0; a < data_.cols(); ++a) {
        auto [l, h] = range(rows, a);
        if (l < h) live.push_back(a);
      }
      if (live.empty()) return id;
      attr = live[rng_.below(live.size())];
      std::tie(lo, hi) = range(rows, attr);
    }
    double split = lo;
    while (split <= lo) split = rng_.uniform(lo, hi);
    auto mid = std::partition(rows.begin(), rows.end(), [&](Eigen::Index r) {
      return data_(r, attr) < split;
    });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());

    const int left = grow(tree, rows.first(n_left), depth + 1);
    const int right = grow(tree, rows.subspan(n_left), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.attribute = attr;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  std::pair<double, double> range(std::span<const Eigen::Index> rows, int attr) const {
    double lo = data_(rows[0], attr);
    double hi = lo;
    for (Eigen::Index r : rows) {
      lo = std::min(lo, data_(r, attr));
      hi = std::max(hi, data_(r, attr));
    }
    return {lo, hi};
  }

  const Matrix& data_;
  Rng& rng_;
  int height_limit_;
};

}  // namespace iforest_detail

// Tree t draws from Rng(derive_seed(seed, t)), so trees are independently
// reproducible.
inline IForestModel iforest_fit(const Matrix& train, std::uint64_t seed,
                                int n_trees = 100) {
  if (train.rows() < 2) {
    throw Error(Errc::kEmptyTrainingSet, "isolation forest needs at least 2 rows");
  }
  if (n_trees < 1) throw Error(Errc::kInvalidConfig, "n_trees must be >= 1");
  const auto n = static_cast<std::size_t>(train.rows());
  IForestModel model;
  model.subsample = std::min(kIForestMaxSamples, n);
  model.height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(model.subsample))));
  model.dim = static_cast<std::size_t>(train.cols());
  model.seed = seed;
  model.degenerate = true;
  for (Eigen::Index i = 1; i < train.rows() && model.degenerate; ++i) {
    model.degenerate = train.row(i) == train.row(0);
  }

  std::vector<Eigen::Index> pool(n);
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (std::size_t i = 0; i < model.subsample; ++i) {
      std::swap(pool[i], pool[i + rng.below(n - i)]);
    }
    std::vector<Eigen::Index> sample(pool.begin(),
                                     pool.begin() + static_cast<std::ptrdiff_t>(model.subsample));
    iforest_detail::TreeBuilder builder(train, rng, model.height_limit);
    model.trees.push_back(builder.build(std::move(sample)));
  }
  return model;
}

// h(x): edges traversed plus c(size) at the terminal node.
template <typename Row>
double path_length(const IsolationTree& tree, const Row& x) {
  int id = 0;
  double depth = 0.0;
  while (!tree.nodes[static_cast<std::size_t>(id)].leaf()) {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    id = x(node.attribute) < node.split ? node.left : node.right;
    depth += 1.0;
  }
  return depth + average_path_length(
                     static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(id)].size));
}

inline double iforest_score_from_path(double mean_path, std::size_t subsample) {
  return std::exp2(-mean_path / average_path_length(subsample));
}

inline std::vector<double> iforest_score(const IForestModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.dim) {
    throw Error(Errc::kDimensionMismatch,
                "isolation forest expects " + std::to_string(model.dim) + " columns");
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double total = 0.0;
    const auto row = x.row(i);
    for (const auto& tree : model.trees) total += path_length(tree, row);
    out[static_cast<std::size_t>(i)] = iforest_score_from_path(
        total / static_cast<double>(model.trees.size()), model.subsample);
  }
  return out;
}

// "IFM1\n" + JSON header (topology) + little-endian float64 split values in
// tree-major, node order.
inline std::string serialize_iforest(const IForestModel& m) {
  nlohmann::ordered_json header;
  header["n_trees"] = m.trees.size();
  header["subsample"] = m.subsample;
  header["height_limit"] = m.height_limit;
  header["dim"] = m.dim;
  header["seed"] = m.seed;
  header["degenerate"] = m.degenerate;
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  std::string payload;
  for (const auto& t : m.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({n.attribute, n.left, n.right, n.size});
      detail::append_f64_le(payload, n.split);
    }
    trees.push_back(std::move(nodes));
  }
  header["trees"] = std::move(trees);
  header["dtype"] = "f64le";
  return "IFM1\n" + header.dump() + "\n" + payload;
}

inline IForestModel deserialize_iforest(std::string_view bytes) {
  auto [header, payload] = detail::split_container(bytes, "IFM1", Errc::kParseError);
  IForestModel m;
  try {
    m.subsample = header.at("subsample").get<std::size_t>();
    m.height_limit = header.at("height_limit").get<int>();
    m.dim = header.at("dim").get<std::size_t>();
    m.seed = header.at("seed").get<std::uint64_t>();
    m.degenerate = header.at("degenerate").get<bool>();
    std::size_t offset = 0;
    for (const auto& tj : header.at("trees")) {
      IsolationTree t;
      for (const auto& nj : tj) {
        if (offset + 8 > payload.size()) throw Error(Errc::kParseError, "truncated payload");
        t.nodes.push_back({nj.at(0).get<int>(), detail::read_f64_le(payload.data() + offset),
                           nj.at(1).get<int>(), nj.at(2).get<int>(), nj.at(3).get<int>()});
        offset += 8;
      }
      m.trees.push_back(std::move(t));
    }
    if (offset != payload.size()) throw Error(Errc::kParseError, "trailing payload");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, e.what());
  }
  return m;
}

}  // namespace provdetect

#endif  // PROVDETECT_IFOREST_HPP_
