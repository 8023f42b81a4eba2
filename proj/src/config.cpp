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

#include "nucleoforge/config.hpp"

#include <cmath>

namespace nucleoforge {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (!std::isfinite(delta_x_min) || !std::isfinite(delta_x_max) || delta_x_min < 0.0) {
    throw ConfigError("delta-x bounds must be finite and non-negative");
  }
  if (delta_x_min > delta_x_max) throw ConfigError("delta-x-min must not exceed delta-x-max");
  if (halo_iters < 0) throw ConfigError("halo-iters must be >= 0");
  if (max_iters < 1) throw ConfigError("max-iters must be >= 1");
  if (patch_size < 1 || patch_stride < 1) throw ConfigError("patch size and stride must be >= 1");
  if (train.iterations < 0 || train.batch_size < 1 || train.hidden < 1 || train.kernel_radius < 0 || train.crop < 1) {
    throw ConfigError("invalid training settings");
  }
  if (!(train.learning_rate >= 0.0) || !(train.complement_weight >= 0.0 && train.complement_weight <= 1.0)) {
    throw ConfigError("learning rate must be >= 0 and complement weight in [0, 1]");
  }
  try {
    (void)schedule.build();
  } catch (const Error& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

json to_json(const PipelineConfig& c) {
  return json{
      {"seed", c.seed},
      {"delta_x_min", c.delta_x_min},
      {"delta_x_max", c.delta_x_max},
      {"ref_area", c.ref_area.to_string()},
      {"halo_iters", c.halo_iters},
      {"max_iters", c.max_iters},
      {"patch_size", c.patch_size},
      {"patch_stride", c.patch_stride},
      {"schedule", {{"steps", c.schedule.steps}, {"beta_1", c.schedule.beta_first}, {"beta_T", c.schedule.beta_last}}},
      {"train",
       {{"iterations", c.train.iterations},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"hidden", c.train.hidden},
        {"kernel_radius", c.train.kernel_radius},
        {"crop", c.train.crop},
        {"complement_weight", c.train.complement_weight}}},
      {"invert_repaint_mask", c.invert_repaint_mask},
      {"deterministic_sampling", c.deterministic_sampling},
      {"manifest", c.manifest},
      {"out_dir", c.out_dir},
  };
}

namespace {

template <typename T>
void take(const json& doc, const char* key, T& into) {
  if (auto it = doc.find(key); it != doc.end()) into = it->get<T>();
}

}  // namespace

PipelineConfig merge_json(PipelineConfig c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  const json known = to_json(c);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (known[key].is_object()) {
      if (!value.is_object()) throw ConfigError("config key '" + key + "' must be an object");
      for (const auto& [sub, unused] : value.items()) {
        if (!known[key].contains(sub)) throw ConfigError("unknown config key '" + key + "." + sub + "'");
      }
    }
  }
  try {
    take(doc, "seed", c.seed);
    take(doc, "delta_x_min", c.delta_x_min);
    take(doc, "delta_x_max", c.delta_x_max);
    if (auto it = doc.find("ref_area"); it != doc.end()) {
      c.ref_area = RefAreaPolicy::parse(it->is_string() ? it->get<std::string>() : it->dump());
    }
    take(doc, "halo_iters", c.halo_iters);
    take(doc, "max_iters", c.max_iters);
    take(doc, "patch_size", c.patch_size);
    take(doc, "patch_stride", c.patch_stride);
    if (auto it = doc.find("schedule"); it != doc.end()) {
      take(*it, "steps", c.schedule.steps);
      take(*it, "beta_1", c.schedule.beta_first);
      take(*it, "beta_T", c.schedule.beta_last);
    }
    if (auto it = doc.find("train"); it != doc.end()) {
      take(*it, "iterations", c.train.iterations);
      take(*it, "learning_rate", c.train.learning_rate);
      take(*it, "batch_size", c.train.batch_size);
      take(*it, "hidden", c.train.hidden);
      take(*it, "kernel_radius", c.train.kernel_radius);
      take(*it, "crop", c.train.crop);
      take(*it, "complement_weight", c.train.complement_weight);
    }
    take(doc, "invert_repaint_mask", c.invert_repaint_mask);
    take(doc, "deterministic_sampling", c.deterministic_sampling);
    take(doc, "manifest", c.manifest);
    take(doc, "out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace nucleoforge
