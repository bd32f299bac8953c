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

#ifndef PROVDETECT_METRICS_HPP_
#define PROVDETECT_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "provdetect/error.hpp"

namespace provdetect {

struct ScoredSample {
  double score = 0.0;  // higher = more anomalous
  int label = 0;       // 1 = anomaly
};

inline std::vector<ScoredSample> make_samples(std::span<const double> scores,
                                              std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(Errc::kDimensionMismatch, "scores and labels differ in length");
  }
  std::vector<ScoredSample> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({scores[i], labels[i]});
  return out;
}

namespace metrics_detail {

struct ClassCounts {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

inline ClassCounts count_classes(std::span<const ScoredSample> samples) {
  ClassCounts c;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) {
      throw Error(Errc::kInvalidConfig, "non-finite score");
    }
    (s.label == 1 ? c.positives : c.negatives) += 1;
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw Error(Errc::kSingleClass, "need at least one positive and one negative sample");
  }
  return c;
}

// Groups of equal score, highest first: (positives, negatives, score).
struct TieGroup {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  double score = 0.0;
};

inline std::vector<TieGroup> tie_groups_descending(std::span<const ScoredSample> samples) {
  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
  std::vector<TieGroup> groups;
  for (const auto& s : sorted) {
    if (groups.empty() || groups.back().score != s.score) groups.push_back({0, 0, s.score});
    (s.label == 1 ? groups.back().positives : groups.back().negatives) += 1;
  }
  return groups;
}

}  // namespace metrics_detail

// Mann-Whitney AUC: (concordant pairs + ties / 2) / (P N), counted exactly in
// integers.
inline double auc_roc(std::span<const ScoredSample> samples) {
  const auto counts = metrics_detail::count_classes(samples);
  const auto groups = metrics_detail::tie_groups_descending(samples);
  // Walk from the lowest score upward so negatives_below is available.
  unsigned __int128 twice_wins = 0;
  std::uint64_t negatives_below = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    twice_wins += static_cast<unsigned __int128>(it->positives) * negatives_below * 2;
    twice_wins += static_cast<unsigned __int128>(it->positives) * it->negatives;
    negatives_below += it->negatives;
  }
  const long double denom = 2.0L * static_cast<long double>(counts.positives) *
                            static_cast<long double>(counts.negatives);
  return static_cast<double>(static_cast<long double>(twice_wins) / denom);
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // samples scoring >= threshold are called positive
};

// One point per distinct score, swept from the highest; starts at (0,0) with
// threshold +inf and ends at (1,1).
inline std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  const auto counts = metrics_detail::count_classes(samples);
  const auto groups = metrics_detail::tie_groups_descending(samples);
  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (const auto& g : groups) {
    tp += g.positives;
    fp += g.negatives;
    points.push_back({static_cast<double>(fp) / static_cast<double>(counts.negatives),
                      static_cast<double>(tp) / static_cast<double>(counts.positives),
                      g.score});
  }
  return points;
}

inline double trapezoid_area(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  }
  return area;
}

// Linearly interpolated quantile of unsorted values, q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::kInvalidConfig, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

enum class ThresholdStrategy { kBenignQuantile, kYouden };

struct ThresholdRule {
  ThresholdStrategy strategy = ThresholdStrategy::kBenignQuantile;
  double q = 0.99;
};

// benign_quantile: q-quantile of benign validation scores.
// youden: midpoint of the score gap that maximizes TPR - FPR under the
// strict rule score > threshold; ties go to the larger threshold.
inline double select_threshold(std::span<const ScoredSample> validation,
                               const ThresholdRule& rule) {
  if (rule.strategy == ThresholdStrategy::kBenignQuantile) {
    if (!(rule.q > 0.0 && rule.q < 1.0)) {
      throw Error(Errc::kInvalidConfig, "quantile must lie in (0, 1)", "q");
    }
    std::vector<double> benign;
    for (const auto& s : validation) {
      if (s.label == 0) benign.push_back(s.score);
    }
    if (benign.empty()) {
      throw Error(Errc::kSingleClass, "benign_quantile needs benign validation samples");
    }
    return quantile(std::move(benign), rule.q);
  }

  const auto counts = metrics_detail::count_classes(validation);
  const auto groups = metrics_detail::tie_groups_descending(validation);
  // J scaled by P*N, kept exact so ties compare equal. Threshold above the
  // maximum: nothing flagged, J = 0.
  __int128 best_j = 0;
  double best_threshold = groups.front().score + 1.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    tp += groups[g].positives;
    fp += groups[g].negatives;
    const __int128 j = static_cast<__int128>(tp) * counts.negatives -
                       static_cast<__int128>(fp) * counts.positives;
    if (j > best_j) {
      best_j = j;
      best_threshold = g + 1 < groups.size()
                           ? 0.5 * (groups[g].score + groups[g + 1].score)
                           : groups[g].score - 1.0;
    }
  }
  return best_threshold;
}

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// score > threshold => predicted anomalous.
inline Confusion classify(std::span<const ScoredSample> samples, double threshold) {
  Confusion c;
  for (const auto& s : samples) {
    const bool flagged = s.score > threshold;
    if (s.label == 1) {
      (flagged ? c.tp : c.fn) += 1;
    } else {
      (flagged ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

}  // namespace provdetect

#endif  // PROVDETECT_METRICS_HPP_
