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

#include <cstdint>
#include <map>
#include <vector>

#include "nucleoforge/labelcore.hpp"

namespace nucleoforge {

/// Contact pixels per instance ID, each list sorted row-major. Every instance
/// of the source map has an entry, possibly empty.
using ContactSets = std::map<std::int32_t, std::vector<Point>>;

/// Grows all nuclei simultaneously over background with the 8-neighbour
/// (3x3) element for at most `max_iters` steps.
///
/// A background pixel is claimed at the first step any front reaches it; it
/// belongs to every front arriving in that same step. A pixel claimed by two
/// or more fronts is a contact pixel of each of them. Two 8-adjacent pixels
/// claimed by different single fronts (nucleus pixels count as claimed at
/// step 0) are both contact pixels of both instances. Fronts never enter
/// pixels already claimed, so growth stops wherever it meets another front.
ContactSets constrained_dilate(const InstanceLabelMap& label, int max_iters);

/// `iterations` binary dilations with the 3x3 element, clipped to the grid.
MaskGrid dilate3x3(const MaskGrid& mask, int iterations);

struct InternuclearMask {
  ContactSets contact_sets;
  MaskGrid mask;  // 0 or 1
  int halo_iters = 0;
};

inline constexpr int kDefaultMaxIters = 10;
inline constexpr int kDefaultHaloIters = 2;

InternuclearMask internuclear_mask(const InstanceLabelMap& label, int halo_iters = kDefaultHaloIters,
                                   int max_iters = kDefaultMaxIters);

}  // namespace nucleoforge
