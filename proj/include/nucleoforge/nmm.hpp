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

// Nuclear migration: every nucleus is translated rigidly along one shared
// direction by a distance inversely proportional to its pixel area. Smaller
// nuclei are drawn on top where translated footprints overlap.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nucleoforge/labelcore.hpp"
#include "nucleoforge/rng.hpp"

namespace nucleoforge {

/// (row, col) components; unit length once inside a MigrationPlan.
struct Direction {
  double drow = 0.0;
  double dcol = 0.0;
};

struct NucleusMigration {
  std::int32_t nucleus_id = 0;
  double displacement = 0.0;  // shared_distance * ref_area / area, before rounding
  Offset offset;
};

struct MigrationPlan {
  Direction direction;
  double shared_distance = 0.0;
  double ref_area = 1.0;
  std::vector<NucleusMigration> per_nucleus;  // same order as the planned nuclei
};

/// Componentwise round-half-away-from-zero of displacement * direction.
Offset round_offset(double displacement, Direction direction);

MigrationPlan plan_migration(std::span<const Nucleus> nuclei, double delta_x, Direction direction,
                             double ref_area = 1.0);

/// Top-first ordering: ascending area, ties broken by lower instance ID.
std::vector<std::size_t> smaller_on_top(std::span<const Nucleus> nuclei);

/// Translates every nucleus of `label` by its planned offset and re-rasterizes
/// with smaller_on_top priority.
ComposeResult apply_migration(const InstanceLabelMap& label, const MigrationPlan& plan);

/// Scaling reference for displacements: literal pixel area (1), the mean
/// nucleus area of the image, or a fixed number.
struct RefAreaPolicy {
  enum class Kind { Literal, Mean, Fixed };
  Kind kind = Kind::Literal;
  double value = 1.0;

  /// Accepts "1", "mean" or a positive number.
  static RefAreaPolicy parse(const std::string& text);
  std::string to_string() const;
  double resolve(std::span<const Nucleus> nuclei) const;

  bool operator==(const RefAreaPolicy&) const = default;
};

/// Draws one shared distance uniformly in [delta_min, delta_max] and one
/// uniformly random direction, then plans the migration.
MigrationPlan sample_migration(std::span<const Nucleus> nuclei, double delta_min, double delta_max,
                               const RefAreaPolicy& ref_area, Rng& rng);

}  // namespace nucleoforge
