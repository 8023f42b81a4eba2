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

#include "nucleoforge/labelcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace nucleoforge {

void validate(const InstanceLabelMap& label) {
  if (!label.instance_ids.same_shape(label.class_ids)) {
    throw Error("instance and class grids differ in shape");
  }
  std::map<std::int32_t, std::int32_t> class_of;
  for (int r = 0; r < label.height(); ++r) {
    for (int c = 0; c < label.width(); ++c) {
      const auto id = label.instance_ids(r, c);
      const auto cls = label.class_ids(r, c);
      if (id < 0 || cls < 0) throw Error("negative label value at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      if (id == 0) continue;
      if (cls == 0) throw Error("instance " + std::to_string(id) + " has background class pixels");
      auto [it, inserted] = class_of.emplace(id, cls);
      if (!inserted && it->second != cls) {
        throw Error("instance " + std::to_string(id) + " has inconsistent class ids (" +
                    std::to_string(it->second) + " vs " + std::to_string(cls) + ")");
      }
    }
  }
}

std::vector<Nucleus> extract_instances(const InstanceLabelMap& label) {
  validate(label);
  std::map<std::int32_t, Nucleus> by_id;
  for (int r = 0; r < label.height(); ++r) {
    for (int c = 0; c < label.width(); ++c) {
      const auto id = label.instance_ids(r, c);
      if (id == 0) continue;
      auto& n = by_id[id];
      if (n.pixels.empty()) {
        n.id = id;
        n.class_id = label.class_ids(r, c);
        n.bbox = {r, c, r, c};
      }
      n.pixels.push_back({r, c});
      n.bbox.top = std::min(n.bbox.top, r);
      n.bbox.left = std::min(n.bbox.left, c);
      n.bbox.bottom = std::max(n.bbox.bottom, r);
      n.bbox.right = std::max(n.bbox.right, c);
    }
  }
  std::vector<Nucleus> nuclei;
  nuclei.reserve(by_id.size());
  for (auto& [id, n] : by_id) {
    double sr = 0.0;
    double sc = 0.0;
    for (const auto& p : n.pixels) {
      sr += p.row;
      sc += p.col;
    }
    n.centroid_row = sr / static_cast<double>(n.area());
    n.centroid_col = sc / static_cast<double>(n.area());
    nuclei.push_back(std::move(n));
  }
  return nuclei;
}

ComposeResult compose_label(std::span<const Nucleus> nuclei, std::span<const Offset> offsets,
                            int height, int width, std::span<const std::size_t> priority) {
  if (offsets.size() != nuclei.size()) throw Error("compose_label: one offset per nucleus required");
  if (priority.size() != nuclei.size()) throw Error("compose_label: priority must rank every nucleus");
  std::vector<bool> seen(nuclei.size(), false);
  for (auto idx : priority) {
    if (idx >= nuclei.size() || seen[idx]) throw Error("compose_label: priority is not a permutation");
    seen[idx] = true;
  }

  ComposeResult result{InstanceLabelMap(height, width), {}};
  auto& out = result.label;
  // Paint bottom-most first so higher-priority nuclei overwrite.
  for (auto it = priority.rbegin(); it != priority.rend(); ++it) {
    const auto& n = nuclei[*it];
    const auto& off = offsets[*it];
    for (const auto& p : n.pixels) {
      const int r = p.row + off.drow;
      const int c = p.col + off.dcol;
      if (!out.instance_ids.contains(r, c)) continue;
      out.instance_ids(r, c) = n.id;
      out.class_ids(r, c) = n.class_id;
    }
  }
  for (std::size_t i = 0; i < nuclei.size(); ++i) {
    const bool any_inside = std::any_of(nuclei[i].pixels.begin(), nuclei[i].pixels.end(), [&](const Point& p) {
      return out.instance_ids.contains(p.row + offsets[i].drow, p.col + offsets[i].dcol);
    });
    if (!any_inside) result.dropped_ids.push_back(nuclei[i].id);
  }
  std::sort(result.dropped_ids.begin(), result.dropped_ids.end());
  return result;
}

StructuralLabel compute_structural_label(const InstanceLabelMap& label) {
  const auto nuclei = extract_instances(label);
  StructuralLabel out{label.class_ids, Grid<double>(label.height(), label.width(), 0.0),
                      Grid<double>(label.height(), label.width(), 0.0)};
  for (const auto& n : nuclei) {
    double max_h = 0.0;
    double max_v = 0.0;
    for (const auto& p : n.pixels) {
      max_h = std::max(max_h, std::abs(p.col - n.centroid_col));
      max_v = std::max(max_v, std::abs(p.row - n.centroid_row));
    }
    const double norm_h = std::max(1.0, max_h);
    const double norm_v = std::max(1.0, max_v);
    for (const auto& p : n.pixels) {
      out.hdist(p) = std::clamp((p.col - n.centroid_col) / norm_h, -1.0, 1.0);
      out.vdist(p) = std::clamp((p.row - n.centroid_row) / norm_v, -1.0, 1.0);
    }
  }
  return out;
}

std::vector<int> window_starts(int extent, int size, int stride) {
  if (size < 1) throw Error("patch size must be positive");
  if (stride < 1) throw Error("patch stride must be positive");
  if (size > extent) {
    throw Error("patch size " + std::to_string(size) + " exceeds source dimension " + std::to_string(extent));
  }
  std::vector<int> starts;
  for (int start = 0; start + size <= extent; start += stride) starts.push_back(start);
  if (starts.back() + size < extent) starts.push_back(extent - size);
  return starts;
}

std::vector<PatchOrigin> patch_origins(int height, int width, int size, int stride) {
  const auto rows = window_starts(height, size, stride);
  const auto cols = window_starts(width, size, stride);
  std::vector<PatchOrigin> origins;
  origins.reserve(rows.size() * cols.size());
  for (int r : rows)
    for (int c : cols) origins.push_back({r, c});
  return origins;
}

}  // namespace nucleoforge
