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

#include "nucleoforge/iim.hpp"

#include <algorithm>
#include <iterator>
#include <set>

namespace nucleoforge {
namespace {

constexpr int kNeighbourRows[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighbourCols[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

void merge_owners(std::vector<std::int32_t>& into, const std::vector<std::int32_t>& from) {
  std::vector<std::int32_t> merged;
  merged.reserve(into.size() + from.size());
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(merged));
  into.swap(merged);
}

}  // namespace

ContactSets constrained_dilate(const InstanceLabelMap& label, int max_iters) {
  validate(label);
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  const int height = label.height();
  const int width = label.width();

  Grid<int> depth(height, width, -1);
  Grid<std::vector<std::int32_t>> owners(height, width);
  ContactSets contacts;
  std::vector<Point> frontier;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto id = label.instance_ids(r, c);
      if (id == 0) continue;
      depth(r, c) = 0;
      owners(r, c) = {id};
      contacts[id];
      frontier.push_back({r, c});
    }
  }

  // Synchronous growth: a pixel first reached in step k inherits the union of
  // the owner sets of all step k-1 pixels that reach it.
  for (int step = 1; step <= max_iters && !frontier.empty(); ++step) {
    std::vector<Point> next;
    for (const auto& p : frontier) {
      for (int k = 0; k < 8; ++k) {
        const int r = p.row + kNeighbourRows[k];
        const int c = p.col + kNeighbourCols[k];
        if (!depth.contains(r, c)) continue;
        if (depth(r, c) == -1) {
          depth(r, c) = step;
          next.push_back({r, c});
        } else if (depth(r, c) != step) {
          continue;
        }
        merge_owners(owners(r, c), owners(p));
      }
    }
    frontier.swap(next);
  }

  std::map<std::int32_t, std::set<Point>> found;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (depth(r, c) < 0) continue;
      const auto& mine = owners(r, c);
      if (mine.size() >= 2) {
        for (auto id : mine) found[id].insert({r, c});
        continue;
      }
      for (int k = 0; k < 8; ++k) {
        const int nr = r + kNeighbourRows[k];
        const int nc = c + kNeighbourCols[k];
        if (!depth.contains(nr, nc) || depth(nr, nc) < 0) continue;
        const auto& theirs = owners(nr, nc);
        if (theirs.size() == 1 && theirs.front() != mine.front()) {
          found[mine.front()].insert({r, c});
          found[theirs.front()].insert({r, c});
        }
      }
    }
  }
  for (auto& [id, pixels] : found) contacts[id].assign(pixels.begin(), pixels.end());
  return contacts;
}

MaskGrid dilate3x3(const MaskGrid& mask, int iterations) {
  if (iterations < 0) throw Error("dilation count must be >= 0");
  MaskGrid current = mask;
  for (auto& v : current.values()) v = v ? 1 : 0;
  for (int it = 0; it < iterations; ++it) {
    MaskGrid next(current.height(), current.width(), 0);
    for (int r = 0; r < current.height(); ++r) {
      for (int c = 0; c < current.width(); ++c) {
        if (!current(r, c)) continue;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc)
            if (next.contains(r + dr, c + dc)) next(r + dr, c + dc) = 1;
      }
    }
    current = std::move(next);
  }
  return current;
}

InternuclearMask internuclear_mask(const InstanceLabelMap& label, int halo_iters, int max_iters) {
  if (halo_iters < 0) throw Error("halo_iters must be >= 0");
  InternuclearMask out;
  out.contact_sets = constrained_dilate(label, max_iters);
  out.halo_iters = halo_iters;
  MaskGrid seeds(label.height(), label.width(), 0);
  for (const auto& [id, pixels] : out.contact_sets)
    for (const auto& p : pixels) seeds(p) = 1;
  out.mask = dilate3x3(seeds, halo_iters);
  return out;
}

}  // namespace nucleoforge
