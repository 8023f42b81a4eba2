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

// Synthetic stand-in data: non-overlapping elliptical nuclei with a wide
// size range, and a matching RGB rendering.

#include <cstdint>
#include <string>
#include <vector>

#include "nucleoforge/io.hpp"
#include "nucleoforge/labelcore.hpp"
#include "nucleoforge/rng.hpp"

namespace nucleoforge {

struct SynthLabel {
  InstanceLabelMap label;
  int requested = 0;
  int placed = 0;
};

/// round(density * height * width / 1000) nuclei (at least one), areas drawn
/// log-uniformly over a 20x range, up to 64 placement attempts each.
SynthLabel synth_label(int height, int width, int n_classes, double density, Rng& rng);

RgbImage render_image(const InstanceLabelMap& label, Rng& rng);

struct SynthOptions {
  int n_images = 4;
  int height = 256;
  int width = 256;
  int n_classes = 3;
  double density = 2.0;  // nuclei per 1000 px^2
  std::uint64_t seed = 0;
};

struct SynthReport {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;  // partial placements, in image order
};

/// Writes img_/inst_/cls_NNNN.png and manifest.json under `out_dir`.
SynthReport synth_dataset(const fs::path& out_dir, const SynthOptions& options, int workers);

}  // namespace nucleoforge
