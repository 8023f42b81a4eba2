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

#include "nucleoforge/metrics.hpp"

#include <algorithm>
#include <utility>

namespace nucleoforge {
namespace {

struct Overlap {
  std::map<std::int32_t, std::uint64_t> gt_area;
  std::map<std::int32_t, std::uint64_t> pred_area;
  // gt id -> (pred id -> intersecting pixel count)
  std::map<std::int32_t, std::map<std::int32_t, std::uint64_t>> inter;
};

Overlap overlap_table(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  if (!gt.same_shape(pred)) throw Error("metrics: ground truth and prediction differ in shape");
  Overlap o;
  auto g = gt.values();
  auto p = pred.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] != 0) ++o.gt_area[g[i]];
    if (p[i] != 0) ++o.pred_area[p[i]];
    if (g[i] != 0 && p[i] != 0) ++o.inter[g[i]][p[i]];
  }
  return o;
}

double iou(std::uint64_t inter, std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(inter) / static_cast<double>(a + b - inter);
}

std::map<std::int32_t, std::int32_t> class_of_instances(const InstanceLabelMap& label) {
  std::map<std::int32_t, std::int32_t> out;
  auto ids = label.instance_ids.values();
  auto cls = label.class_ids.values();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != 0) out.emplace(ids[i], cls[i]);
  return out;
}

double mean_over(const std::set<std::int32_t>& classes, const std::map<std::int32_t, double>& per_class,
                 bool pred_nonempty) {
  if (classes.empty()) return pred_nonempty ? 0.0 : 1.0;
  double total = 0.0;
  for (auto c : classes) total += per_class.at(c);
  return total / static_cast<double>(classes.size());
}

}  // namespace

MatchResult match_instances(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  const auto o = overlap_table(gt, pred);
  MatchResult result;
  std::set<std::int32_t> matched_pred;
  for (const auto& [gid, garea] : o.gt_area) {
    bool matched = false;
    if (auto row = o.inter.find(gid); row != o.inter.end()) {
      for (const auto& [pid, n] : row->second) {
        const double v = iou(n, garea, o.pred_area.at(pid));
        if (v > 0.5) {
          result.pairs.push_back({gid, pid, v});
          matched_pred.insert(pid);
          matched = true;
          break;
        }
      }
    }
    if (!matched) result.unmatched_gt.push_back(gid);
  }
  for (const auto& [pid, parea] : o.pred_area)
    if (!matched_pred.contains(pid)) result.unmatched_pred.push_back(pid);
  return result;
}

double AjiCounts::score() const {
  if (union_area == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(union_area);
}

AjiCounts& AjiCounts::operator+=(const AjiCounts& o) {
  intersection += o.intersection;
  union_area += o.union_area;
  return *this;
}

double PqCounts::dq() const {
  const double denom = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
  if (denom == 0.0) return 1.0;
  return static_cast<double>(tp) / denom;
}

double PqCounts::sq() const {
  if (tp == 0) return fp + fn == 0 ? 1.0 : 0.0;
  return iou_sum / static_cast<double>(tp);
}

PqCounts& PqCounts::operator+=(const PqCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  iou_sum += o.iou_sum;
  return *this;
}

double F1Counts::score() const {
  if (!defined()) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

F1Counts& F1Counts::operator+=(const F1Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

AjiCounts aji_counts(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  const auto o = overlap_table(gt, pred);
  AjiCounts counts;
  std::set<std::int32_t> used;
  for (const auto& [gid, garea] : o.gt_area) {
    std::int32_t best = 0;
    double best_iou = 0.0;
    std::uint64_t best_inter = 0;
    if (auto row = o.inter.find(gid); row != o.inter.end()) {
      // Ascending pred ID with strict '>' keeps the lower ID on ties. A
      // prediction already paired with another GT stays eligible.
      for (const auto& [pid, n] : row->second) {
        const double v = iou(n, garea, o.pred_area.at(pid));
        if (v > best_iou) {
          best = pid;
          best_iou = v;
          best_inter = n;
        }
      }
    }
    if (best == 0) {
      counts.union_area += garea;
      continue;
    }
    used.insert(best);
    counts.intersection += best_inter;
    counts.union_area += garea + o.pred_area.at(best) - best_inter;
  }
  for (const auto& [pid, parea] : o.pred_area)
    if (!used.contains(pid)) counts.union_area += parea;
  return counts;
}

PqCounts pq_counts(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  const auto m = match_instances(gt, pred);
  PqCounts counts;
  counts.tp = m.pairs.size();
  counts.fp = m.unmatched_pred.size();
  counts.fn = m.unmatched_gt.size();
  for (const auto& p : m.pairs) counts.iou_sum += p.iou;
  return counts;
}

double aji(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  return aji_counts(gt.instance_ids, pred.instance_ids).score();
}

PanopticScores panoptic_quality(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  const auto c = pq_counts(gt.instance_ids, pred.instance_ids);
  return {c.dq(), c.sq(), c.pq()};
}

Grid<std::int32_t> restrict_to_class(const InstanceLabelMap& label, std::int32_t class_id) {
  Grid<std::int32_t> out(label.height(), label.width(), 0);
  auto ids = label.instance_ids.values();
  auto cls = label.class_ids.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != 0 && cls[i] == class_id) dst[i] = ids[i];
  return out;
}

std::set<std::int32_t> classes_present(const InstanceLabelMap& label) {
  std::set<std::int32_t> out;
  auto ids = label.instance_ids.values();
  auto cls = label.class_ids.values();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != 0) out.insert(cls[i]);
  return out;
}

MulticlassScores multiclass_scores(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  const auto stats = image_stats(gt, pred);
  const auto pooled = scores_from(stats);
  MulticlassScores out;
  for (const auto& [c, counts] : stats.class_aji) out.aji[c] = counts.score();
  for (const auto& [c, counts] : stats.class_pq) out.pq[c] = counts.pq();
  out.m_aji = pooled.m_aji;
  out.m_pq = pooled.m_pq;
  return out;
}

std::map<std::int32_t, F1Counts> classification_counts(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  const auto m = match_instances(gt.instance_ids, pred.instance_ids);
  const auto gt_class = class_of_instances(gt);
  const auto pred_class = class_of_instances(pred);
  std::map<std::int32_t, F1Counts> counts;
  for (const auto& pair : m.pairs) {
    const auto cg = gt_class.at(pair.gt_id);
    const auto cp = pred_class.at(pair.pred_id);
    if (cg == cp) {
      ++counts[cg].tp;
    } else {
      ++counts[cg].fn;
      ++counts[cp].fp;
    }
  }
  for (auto gid : m.unmatched_gt) ++counts[gt_class.at(gid)].fn;
  for (auto pid : m.unmatched_pred) ++counts[pred_class.at(pid)].fp;
  return counts;
}

F1Scores classification_f1(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  const auto stats = image_stats(gt, pred);
  const auto pooled = scores_from(stats);
  return {pooled.f1, pooled.m_f1};
}

ImageStats& ImageStats::operator+=(const ImageStats& o) {
  aji += o.aji;
  pq += o.pq;
  for (const auto& [c, v] : o.class_aji) class_aji[c] += v;
  for (const auto& [c, v] : o.class_pq) class_pq[c] += v;
  for (const auto& [c, v] : o.class_f1) class_f1[c] += v;
  gt_classes.insert(o.gt_classes.begin(), o.gt_classes.end());
  return *this;
}

ImageStats image_stats(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  if (gt.height() != pred.height() || gt.width() != pred.width()) {
    throw Error("metrics: ground truth and prediction differ in shape");
  }
  ImageStats s;
  s.aji = aji_counts(gt.instance_ids, pred.instance_ids);
  s.pq = pq_counts(gt.instance_ids, pred.instance_ids);
  s.gt_classes = classes_present(gt);
  auto all = s.gt_classes;
  const auto pred_classes = classes_present(pred);
  all.insert(pred_classes.begin(), pred_classes.end());
  for (auto c : all) {
    const auto g = restrict_to_class(gt, c);
    const auto p = restrict_to_class(pred, c);
    s.class_aji[c] = aji_counts(g, p);
    s.class_pq[c] = pq_counts(g, p);
  }
  s.class_f1 = classification_counts(gt, pred);
  return s;
}

DatasetScores scores_from(const ImageStats& pooled) {
  DatasetScores out;
  out.b_aji = pooled.aji.score();
  out.b_pq = pooled.pq.pq();
  std::map<std::int32_t, double> aji_c;
  std::map<std::int32_t, double> pq_c;
  for (const auto& [c, v] : pooled.class_aji) aji_c[c] = v.score();
  for (const auto& [c, v] : pooled.class_pq) pq_c[c] = v.pq();
  for (const auto& [c, v] : pooled.class_f1)
    if (v.defined()) out.f1[c] = v.score();
  // Only consulted when ground truth is empty, where the union is the prediction area.
  const bool pred_nonempty = pooled.aji.union_area > 0;
  out.m_aji = mean_over(pooled.gt_classes, aji_c, pred_nonempty);
  out.m_pq = mean_over(pooled.gt_classes, pq_c, pred_nonempty);
  out.m_f1 = mean_over(pooled.gt_classes, out.f1, pred_nonempty);
  return out;
}

DatasetScores aggregate_instancewise(std::span<const ImageStats> per_image) {
  ImageStats pooled;
  for (const auto& s : per_image) pooled += s;
  return scores_from(pooled);
}

}  // namespace nucleoforge
