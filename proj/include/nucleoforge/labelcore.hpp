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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nucleoforge/grid.hpp"

namespace nucleoforge {

/// Per-pixel instance IDs paired with per-pixel class IDs. Zero is background
/// in both grids. Instances are defined by shared ID, not by connectivity.
struct InstanceLabelMap {
  Grid<std::int32_t> instance_ids;
  Grid<std::int32_t> class_ids;

  InstanceLabelMap() = default;
  InstanceLabelMap(int height, int width) : instance_ids(height, width), class_ids(height, width) {}
  InstanceLabelMap(Grid<std::int32_t> instances, Grid<std::int32_t> classes)
      : instance_ids(std::move(instances)), class_ids(std::move(classes)) {}

  int height() const noexcept { return instance_ids.height(); }
  int width() const noexcept { return instance_ids.width(); }

  bool operator==(const InstanceLabelMap&) const = default;
};

/// Throws Error naming the offending instance when the map is inconsistent.
void validate(const InstanceLabelMap& label);

/// Inclusive pixel rectangle.
struct BoundingBox {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;

  bool operator==(const BoundingBox&) const = default;
};

struct Nucleus {
  std::int32_t id = 0;
  std::int32_t class_id = 0;
  std::vector<Point> pixels;  // row-major scan order
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  BoundingBox bbox;

  std::size_t area() const noexcept { return pixels.size(); }
};

/// One Nucleus per distinct nonzero instance ID, ascending by ID.
std::vector<Nucleus> extract_instances(const InstanceLabelMap& label);

struct Offset {
  int drow = 0;
  int dcol = 0;

  bool operator==(const Offset&) const = default;
};

struct ComposeResult {
  InstanceLabelMap label;
  std::vector<std::int32_t> dropped_ids;  // nuclei translated entirely off canvas
};

/// Rasterizes translated nuclei onto a height x width canvas.
///
/// `priority` lists indices into `nuclei` from top-most to bottom-most; it must
/// be a permutation. Where translated footprints overlap, the pixel goes to the
/// nucleus listed earlier. Pixels leaving the canvas are clipped.
ComposeResult compose_label(std::span<const Nucleus> nuclei, std::span<const Offset> offsets,
                            int height, int width, std::span<const std::size_t> priority);

/// Semantic map plus per-instance horizontal/vertical offsets from the
/// instance centroid, normalized to [-1, 1] by the instance's largest offset.
struct StructuralLabel {
  Grid<std::int32_t> sem;
  Grid<double> hdist;
  Grid<double> vdist;
};

StructuralLabel compute_structural_label(const InstanceLabelMap& label);

struct PatchOrigin {
  int row = 0;
  int col = 0;

  bool operator==(const PatchOrigin&) const = default;
};

/// Sliding-window origins along one axis: multiples of stride that fit, plus a
/// final origin clamped to `extent - size` when the regular steps leave the
/// border uncovered.
std::vector<int> window_starts(int extent, int size, int stride);

std::vector<PatchOrigin> patch_origins(int height, int width, int size, int stride);

template <typename Payload>
struct Patch {
  PatchOrigin origin;
  int size = 0;
  Payload payload;
};

inline InstanceLabelMap crop(const InstanceLabelMap& src, int row, int col, int height, int width) {
  return {crop(src.instance_ids, row, col, height, width),
          crop(src.class_ids, row, col, height, width)};
}

/// Square patches of `size` pixels cropped at every origin from patch_origins.
template <typename Payload>
std::vector<Patch<Payload>> extract_patches(const Payload& source, int size, int stride) {
  std::vector<Patch<Payload>> patches;
  for (const auto& origin : patch_origins(source.height(), source.width(), size, stride)) {
    patches.push_back({origin, size, crop(source, origin.row, origin.col, size, size)});
  }
  return patches;
}

}  // namespace nucleoforge
