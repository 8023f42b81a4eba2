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

// Batch commands over a dataset manifest. Each image is processed
// independently with a seed derived from (config.seed, manifest index), and
// every output file is named after its manifest index, so results do not
// depend on the worker count. Summary files are written once, in manifest
// order, after all workers finish.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nucleoforge/config.hpp"
#include "nucleoforge/iim.hpp"
#include "nucleoforge/io.hpp"
#include "nucleoforge/nmm.hpp"
#include "nucleoforge/tiny_denoiser.hpp"

namespace nucleoforge {

struct BatchReport {
  std::size_t processed = 0;
  std::vector<std::string> failures;  // "<input>: <reason>", manifest order

  bool ok() const { return failures.empty(); }
};

/// "NNNN_<instance map stem>": unique per manifest entry.
std::string output_stem(const ManifestEntry& entry, std::size_t index);

struct AugmentOutput {
  InstanceLabelMap label;
  MigrationPlan plan;
  std::vector<std::int32_t> dropped_ids;
  InternuclearMask mask;
  StructuralLabel structural;
};

/// Migration with freshly sampled distance and direction, then the
/// internuclear mask and structural label of the migrated map.
AugmentOutput augment_label(const InstanceLabelMap& label, const PipelineConfig& config, std::uint64_t image_seed);

nlohmann::json provenance_record(const AugmentOutput& out, std::uint64_t image_seed, const std::string& source);

/// Re-applies the offsets of a provenance record to `source_label`.
InstanceLabelMap replay_provenance(const InstanceLabelMap& source_label, const nlohmann::json& record);

BatchReport run_augment(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers);
BatchReport run_mask(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers);
BatchReport run_structmap(const Manifest& manifest, const fs::path& out_dir, int workers);
BatchReport run_patches(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers);
BatchReport run_noise_demo(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir,
                           int workers);

/// Grayscale crop of the entry's image at the train.crop window holding the
/// most internuclear-mask pixels, with that crop's structural label and mask.
TrainingItem training_item(const PipelineConfig& config, const Manifest& manifest, const ManifestEntry& entry);
std::vector<TrainingItem> build_training_items(const PipelineConfig& config, const Manifest& manifest);

struct TrainToyReport {
  BatchReport batch;
  std::vector<double> loss_curve;
};

/// Trains on the whole manifest and writes denoiser.npy, denoiser.json and
/// loss_curve.npy under `out_dir`.
TrainToyReport run_train_toy(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir);

/// Loads a denoiser written by run_train_toy from its JSON descriptor.
TinyDenoiser load_tiny_denoiser(const fs::path& descriptor);

/// Inpaints every image with the given trained denoiser, or with the
/// closed-form oracle when `descriptor` is empty.
BatchReport run_sample(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir,
                       const fs::path& descriptor, int workers);

struct EvalResult {
  BatchReport batch;
  nlohmann::json report;  // {per_image: [...], pooled: {...}}
};

EvalResult run_eval(const Manifest& gt, const Manifest& pred, int workers);

}  // namespace nucleoforge
