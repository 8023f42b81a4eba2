// Copyright 2026 The NucleoForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Instance segmentation and classification metrics. Every score is computed
// from raw counts so that per-image results can be pooled across a dataset
// before forming ratios.
//
// Conventions:
//   * empty ground truth and empty prediction score 1 on every metric;
//   * empty ground truth against a nonempty prediction scores 0;
//   * AJI ties between equally overlapping predictions go to the lower ID.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "nucleoforge/labelcore.hpp"

namespace nucleoforge {

struct MatchPair {
  std::int32_t gt_id = 0;
  std::int32_t pred_id = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // ascending gt_id
  std::vector<std::int32_t> unmatched_gt;
  std::vector<std::int32_t> unmatched_pred;
};

/// Pairs with IoU strictly above 0.5; such pairs are unique.
MatchResult match_instances(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred);

struct AjiCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_area = 0;

  double score() const;
  AjiCounts& operator+=(const AjiCounts& o);
  bool operator==(const AjiCounts&) const = default;
};

struct PqCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double iou_sum = 0.0;

  double dq() const;
  double sq() const;
  double pq() const { return dq() * sq(); }
  PqCounts& operator+=(const PqCounts& o);
  bool operator==(const PqCounts&) const = default;
};

struct F1Counts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  bool defined() const { return tp + fp + fn > 0; }
  double score() const;
  F1Counts& operator+=(const F1Counts& o);
  bool operator==(const F1Counts&) const = default;
};

AjiCounts aji_counts(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred);
PqCounts pq_counts(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred);

double aji(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

struct PanopticScores {
  double dq = 0.0;
  double sq = 0.0;
  double pq = 0.0;
};

PanopticScores panoptic_quality(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

/// Instance map keeping only instances of class `class_id`.
Grid<std::int32_t> restrict_to_class(const InstanceLabelMap& label, std::int32_t class_id);

/// Class IDs carried by at least one instance pixel.
std::set<std::int32_t> classes_present(const InstanceLabelMap& label);

struct MulticlassScores {
  std::map<std::int32_t, double> aji;  // classes present in either map
  std::map<std::int32_t, double> pq;
  double m_aji = 0.0;  // mean over classes present in ground truth
  double m_pq = 0.0;
};

MulticlassScores multiclass_scores(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

/// Class-agnostic IoU > 0.5 matching, then per-class confusion counts.
std::map<std::int32_t, F1Counts> classification_counts(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

struct F1Scores {
  std::map<std::int32_t, double> per_class;
  double m_f1 = 0.0;
};

F1Scores classification_f1(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

/// Raw counts for one image; summing ImageStats pools a dataset.
struct ImageStats {
  AjiCounts aji;
  PqCounts pq;
  std::map<std::int32_t, AjiCounts> class_aji;
  std::map<std::int32_t, PqCounts> class_pq;
  std::map<std::int32_t, F1Counts> class_f1;
  std::set<std::int32_t> gt_classes;

  ImageStats& operator+=(const ImageStats& o);
  bool operator==(const ImageStats&) const = default;
};

ImageStats image_stats(const InstanceLabelMap& gt, const InstanceLabelMap& pred);

struct DatasetScores {
  double b_aji = 0.0;
  double b_pq = 0.0;
  double m_aji = 0.0;
  double m_pq = 0.0;
  std::map<std::int32_t, double> f1;
  double m_f1 = 0.0;
};

/// Scores from counts pooled over all images (instance-wise), so images with
/// no instances of a class add nothing rather than a zero ratio.
DatasetScores scores_from(const ImageStats& pooled);
DatasetScores aggregate_instancewise(std::span<const ImageStats> per_image);

}  // namespace nucleoforge
