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
#include <string>

#include "json.hpp"
#include "nucleoforge/diffusion.hpp"
#include "nucleoforge/iim.hpp"
#include "nucleoforge/nmm.hpp"

namespace nucleoforge {

/// Thrown for invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ScheduleConfig {
  int steps = 50;
  double beta_first = 1e-4;
  double beta_last = 0.2;

  NoiseSchedule build() const { return linear_schedule(steps, beta_first, beta_last); }
  bool operator==(const ScheduleConfig&) const = default;
};

struct TrainConfig {
  int iterations = 2000;
  double learning_rate = 1e-2;
  int batch_size = 4;
  int hidden = 16;
  int kernel_radius = 1;
  int crop = 16;
  double complement_weight = 0.0;

  bool operator==(const TrainConfig&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  double delta_x_min = 30.0;
  double delta_x_max = 100.0;
  RefAreaPolicy ref_area;
  int halo_iters = kDefaultHaloIters;
  int max_iters = kDefaultMaxIters;
  int patch_size = 256;
  int patch_stride = 164;
  ScheduleConfig schedule;
  TrainConfig train;
  bool invert_repaint_mask = false;
  bool deterministic_sampling = false;
  std::string manifest;
  std::string out_dir = "out";

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Keys absent from `doc` keep the values already in `base`.
PipelineConfig merge_json(PipelineConfig base, const nlohmann::json& doc);

}  // namespace nucleoforge
