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

#include "nucleoforge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>

#include "nucleoforge/diffusion.hpp"
#include "nucleoforge/metrics.hpp"
#include "nucleoforge/parallel.hpp"

namespace nucleoforge {

using nlohmann::json;

namespace {

/// Runs `fn(i)` for each manifest entry, collecting per-entry failures.
template <typename Fn>
BatchReport for_each_entry(const Manifest& manifest, int workers, Fn&& fn) {
  const auto n = manifest.entries.size();
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& ex) {
      errors[i] = manifest.entries[i].instance_map + ": " + ex.what();
    }
  });
  BatchReport report;
  for (auto& e : errors) {
    if (e.empty()) {
      ++report.processed;
    } else {
      report.failures.push_back(std::move(e));
    }
  }
  return report;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::absolute(target).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal()).generic_string();
}

json contacts_json(const ContactSets& contacts) {
  json out = json::object();
  for (const auto& [id, pixels] : contacts) {
    json list = json::array();
    for (const auto& p : pixels) list.push_back({p.row, p.col});
    out[std::to_string(id)] = std::move(list);
  }
  return out;
}

void write_structural(const fs::path& out_dir, const std::string& stem, const StructuralLabel& s) {
  write_png_gray8(out_dir / (stem + "_sem.png"), s.sem);
  write_npy(out_dir / (stem + "_hdist.npy"), s.hdist);
  write_npy(out_dir / (stem + "_vdist.npy"), s.vdist);
}

/// Separator-framed tile grid of equally sized RGB images.
RgbImage tile(const std::vector<std::vector<RgbImage>>& rows) {
  constexpr int kGap = 2;
  const int h = rows.front().front().height();
  const int w = rows.front().front().width();
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  const int out_h = static_cast<int>(rows.size()) * (h + kGap) + kGap;
  const int out_w = static_cast<int>(cols) * (w + kGap) + kGap;
  RgbImage out(out_h, out_w, Rgb{255, 255, 255});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const int top = kGap + static_cast<int>(i) * (h + kGap);
      const int left = kGap + static_cast<int>(j) * (w + kGap);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out(top + r, left + c) = rows[i][j](r, c);
    }
  }
  return out;
}

int max_class(const std::vector<TrainingItem>& items) {
  int m = 1;
  for (const auto& it : items)
    for (auto v : it.label.sem.values()) m = std::max(m, static_cast<int>(v));
  return m;
}

json scores_json(const DatasetScores& s) {
  json f1 = json::object();
  for (const auto& [c, v] : s.f1) f1[std::to_string(c)] = v;
  return json{{"mAJI", s.m_aji}, {"mPQ", s.m_pq}, {"bAJI", s.b_aji}, {"bPQ", s.b_pq}, {"F1", f1}, {"mF1", s.m_f1}};
}

}  // namespace

std::string output_stem(const ManifestEntry& entry, std::size_t index) {
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "%04zu_", index);
  return prefix + fs::path(entry.instance_map).stem().string();
}

AugmentOutput augment_label(const InstanceLabelMap& label, const PipelineConfig& config, std::uint64_t image_seed) {
  Rng rng(image_seed);
  const auto nuclei = extract_instances(label);
  AugmentOutput out;
  out.plan = sample_migration(nuclei, config.delta_x_min, config.delta_x_max, config.ref_area, rng);
  auto composed = apply_migration(label, out.plan);
  out.label = std::move(composed.label);
  out.dropped_ids = std::move(composed.dropped_ids);
  out.mask = internuclear_mask(out.label, config.halo_iters, config.max_iters);
  out.structural = compute_structural_label(out.label);
  return out;
}

json provenance_record(const AugmentOutput& out, std::uint64_t image_seed, const std::string& source) {
  json offsets = json::array();
  for (const auto& m : out.plan.per_nucleus) {
    offsets.push_back({{"id", m.nucleus_id}, {"displacement", m.displacement}, {"offset", {m.offset.drow, m.offset.dcol}}});
  }
  return json{{"source", source},
              {"seed", image_seed},
              {"delta_x", out.plan.shared_distance},
              {"direction", {out.plan.direction.drow, out.plan.direction.dcol}},
              {"ref_area", out.plan.ref_area},
              {"offsets", offsets},
              {"dropped", out.dropped_ids}};
}

InstanceLabelMap replay_provenance(const InstanceLabelMap& source_label, const json& record) {
  const auto nuclei = extract_instances(source_label);
  std::map<std::int32_t, Offset> by_id;
  for (const auto& o : record.at("offsets")) {
    by_id[o.at("id").get<std::int32_t>()] = {o.at("offset").at(0).get<int>(), o.at("offset").at(1).get<int>()};
  }
  std::vector<Offset> offsets;
  for (const auto& n : nuclei) offsets.push_back(by_id.at(n.id));
  return compose_label(nuclei, offsets, source_label.height(), source_label.width(), smaller_on_top(nuclei)).label;
}

BatchReport run_augment(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers) {
  config.validate();
  fs::create_directories(out_dir);
  const auto n = manifest.entries.size();
  std::vector<json> records(n);
  std::vector<ManifestEntry> entries(n);
  auto report = for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto label = load_label(manifest, entry);
    const auto seed = derive_seed(config.seed, i);
    const auto out = augment_label(label, config, seed);
    const auto stem = output_stem(entry, i);
    ManifestEntry aug{relative_to(manifest.resolve(entry.image), out_dir), stem + "_inst.png", stem + "_cls.png"};
    save_label(out_dir / aug.instance_map, out_dir / aug.class_map, out.label);
    write_mask_png(out_dir / (stem + "_mask.png"), out.mask.mask);
    write_structural(out_dir, stem, out.structural);
    records[i] = provenance_record(out, seed, entry.instance_map);
    entries[i] = aug;
  });
  // Paths are left out so that runs into different directories match byte for byte.
  auto effective = to_json(config);
  effective.erase("manifest");
  effective.erase("out_dir");
  json provenance{{"seed", config.seed}, {"config", effective}, {"records", json::array()}};
  std::vector<ManifestEntry> done;
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].is_null()) continue;
    provenance["records"].push_back(records[i]);
    done.push_back(entries[i]);
  }
  write_text(out_dir / "provenance.json", provenance.dump(2));
  write_manifest(out_dir / "manifest.json", done);
  return report;
}

BatchReport run_mask(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers) {
  config.validate();
  fs::create_directories(out_dir);
  return for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto mask = internuclear_mask(load_label(manifest, entry), config.halo_iters, config.max_iters);
    const auto stem = output_stem(entry, i);
    write_mask_png(out_dir / (stem + "_mask.png"), mask.mask);
    write_text(out_dir / (stem + "_contacts.json"), contacts_json(mask.contact_sets).dump());
  });
}

BatchReport run_structmap(const Manifest& manifest, const fs::path& out_dir, int workers) {
  fs::create_directories(out_dir);
  return for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    write_structural(out_dir, output_stem(entry, i), compute_structural_label(load_label(manifest, entry)));
  });
}

BatchReport run_patches(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir, int workers) {
  config.validate();
  fs::create_directories(out_dir);
  const auto n = manifest.entries.size();
  std::vector<std::vector<ManifestEntry>> per_entry(n);
  auto report = for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto label = load_label(manifest, entry);
    const auto image = read_png_rgb(manifest.resolve(entry.image));
    if (!image.same_shape(label.height(), label.width())) throw Error("image and label sizes differ");
    const auto stem = output_stem(entry, i);
    const auto label_patches = extract_patches(label, config.patch_size, config.patch_stride);
    const auto image_patches = extract_patches(image, config.patch_size, config.patch_stride);
    for (std::size_t k = 0; k < label_patches.size(); ++k) {
      char suffix[48];
      std::snprintf(suffix, sizeof suffix, "_r%04d_c%04d", label_patches[k].origin.row, label_patches[k].origin.col);
      ManifestEntry e{stem + suffix + "_img.png", stem + suffix + "_inst.png", stem + suffix + "_cls.png"};
      write_png_rgb(out_dir / e.image, image_patches[k].payload);
      save_label(out_dir / e.instance_map, out_dir / e.class_map, label_patches[k].payload);
      per_entry[i].push_back(std::move(e));
    }
  });
  std::vector<ManifestEntry> all;
  for (auto& v : per_entry) all.insert(all.end(), v.begin(), v.end());
  write_manifest(out_dir / "manifest.json", all);
  return report;
}

BatchReport run_noise_demo(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir,
                           int workers) {
  config.validate();
  fs::create_directories(out_dir);
  const auto sched = config.schedule.build();
  return for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto label = load_label(manifest, entry);
    const auto x0 = to_tensor(read_png_rgb(manifest.resolve(entry.image)));
    if (x0.height() != label.height() || x0.width() != label.width()) throw Error("image and label sizes differ");
    auto region = internuclear_mask(label, config.halo_iters, config.max_iters).mask;
    if (config.invert_repaint_mask) region = complement(region);
    Rng rng(derive_seed(config.seed, i));
    const auto eps = standard_normal(x0.channels(), x0.height(), x0.width(), rng);

    // Row 1: masked forward noising at increasing t. Row 2: a fully noised
    // image after known-region replacement at the same t.
    std::vector<RgbImage> forward;
    std::vector<RgbImage> replaced;
    for (int q = 0; q <= 4; ++q) {
      const int t = std::max(1, (sched.steps * q + 3) / 4);
      forward.push_back(to_rgb(masked_q_sample(x0, region, t, eps, sched)));
      replaced.push_back(to_rgb(repaint_step(q_sample(x0, t, eps, sched), x0, region)));
    }
    MaskGrid shown = region;
    RgbImage mask_rgb(shown.height(), shown.width());
    for (int r = 0; r < shown.height(); ++r)
      for (int c = 0; c < shown.width(); ++c) mask_rgb(r, c) = shown(r, c) ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
    forward.insert(forward.begin(), to_rgb(x0));
    replaced.insert(replaced.begin(), mask_rgb);
    write_png_rgb(out_dir / (output_stem(entry, i) + "_noise_demo.png"), tile({forward, replaced}));
  });
}

TrainingItem training_item(const PipelineConfig& config, const Manifest& manifest, const ManifestEntry& entry) {
  const int crop_size = config.train.crop;
  const auto label = load_label(manifest, entry);
  const auto x0 = to_gray_tensor(read_png_rgb(manifest.resolve(entry.image)));
  if (x0.height() != label.height() || x0.width() != label.width()) {
    throw Error(entry.image + ": image and label sizes differ");
  }
  const auto mask = internuclear_mask(label, config.halo_iters, config.max_iters).mask;
  PatchOrigin best;
  long best_count = -1;
  for (const auto& o : patch_origins(label.height(), label.width(), crop_size, crop_size)) {
    long count = 0;
    for (int r = 0; r < crop_size; ++r)
      for (int c = 0; c < crop_size; ++c) count += mask(o.row + r, o.col + c) ? 1 : 0;
    if (count > best_count) {
      best_count = count;
      best = o;
    }
  }
  TrainingItem item;
  item.label = compute_structural_label(crop(label, best.row, best.col, crop_size, crop_size));
  item.mask = crop(mask, best.row, best.col, crop_size, crop_size);
  item.x0 = Tensor(1, crop_size, crop_size);
  for (int r = 0; r < crop_size; ++r)
    for (int c = 0; c < crop_size; ++c) item.x0(0, r, c) = x0(0, best.row + r, best.col + c);
  return item;
}

std::vector<TrainingItem> build_training_items(const PipelineConfig& config, const Manifest& manifest) {
  std::vector<TrainingItem> items;
  for (const auto& entry : manifest.entries) items.push_back(training_item(config, manifest, entry));
  return items;
}

TrainToyReport run_train_toy(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  const auto items = build_training_items(config, manifest);
  if (items.empty()) throw Error("manifest has no entries to train on");
  const auto sched = config.schedule.build();
  TinyDenoiserArch arch;
  arch.channels = 1;
  arch.hidden = config.train.hidden;
  arch.kernel_radius = config.train.kernel_radius;
  arch.num_classes = max_class(items);
  TrainOptions options;
  options.iterations = config.train.iterations;
  options.learning_rate = config.train.learning_rate;
  options.batch_size = config.train.batch_size;
  options.seed = config.seed;
  options.complement_weight = config.train.complement_weight;
  auto result = train_tiny_denoiser(items, sched, arch, options);

  const auto params = result.model.parameters();
  const std::size_t pshape[1] = {params.size()};
  write_npy_f64(out_dir / "denoiser.npy", pshape, params);
  const std::size_t lshape[1] = {result.loss_curve.size()};
  write_npy_f64(out_dir / "loss_curve.npy", lshape, result.loss_curve);
  const auto& a = result.model.arch();
  json descriptor{
      {"arch",
       {{"type", "tiny-conv-tanh"},
        {"channels", a.channels},
        {"hidden", a.hidden},
        {"kernel_radius", a.kernel_radius},
        {"num_classes", a.num_classes},
        {"steps", a.steps}}},
      {"seed", config.seed},
      {"schedule", {{"steps", config.schedule.steps}, {"beta_1", config.schedule.beta_first}, {"beta_T", config.schedule.beta_last}}},
      {"iterations", options.iterations},
      {"learning_rate", options.learning_rate},
      {"batch_size", options.batch_size},
      {"crop", config.train.crop},
      {"parameters", "denoiser.npy"},
  };
  write_text(out_dir / "denoiser.json", descriptor.dump(2));
  TrainToyReport report;
  report.batch.processed = items.size();
  report.loss_curve = std::move(result.loss_curve);
  return report;
}

TinyDenoiser load_tiny_denoiser(const fs::path& descriptor) {
  json doc;
  try {
    doc = json::parse(read_text(descriptor));
    const auto& a = doc.at("arch");
    TinyDenoiserArch arch;
    arch.channels = a.at("channels").get<int>();
    arch.hidden = a.at("hidden").get<int>();
    arch.kernel_radius = a.at("kernel_radius").get<int>();
    arch.num_classes = a.at("num_classes").get<int>();
    arch.steps = a.at("steps").get<int>();
    const auto params = read_npy(descriptor.parent_path() / doc.at("parameters").get<std::string>());
    return TinyDenoiser(arch, params.data);
  } catch (const json::exception& e) {
    throw Error("invalid denoiser descriptor '" + descriptor.string() + "': " + e.what());
  }
}

BatchReport run_sample(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir,
                       const fs::path& descriptor, int workers) {
  config.validate();
  fs::create_directories(out_dir);
  const auto sched = config.schedule.build();
  std::optional<TinyDenoiser> trained;
  if (!descriptor.empty()) {
    trained = load_tiny_denoiser(descriptor);
    if (trained->arch().steps != sched.steps) throw ConfigError("denoiser was trained with a different step count");
  }
  return for_each_entry(manifest, workers, [&](std::size_t i) {
    const auto item = training_item(config, manifest, manifest.entries[i]);
    SamplingOptions options;
    options.seed = derive_seed(config.seed, i);
    options.deterministic = config.deterministic_sampling;
    options.invert_mask = config.invert_repaint_mask;
    Tensor sample;
    if (trained) {
      sample = inpaint_sample(*trained, item.x0, item.label, item.mask, sched, options);
    } else {
      const OracleDenoiser oracle(item.x0, sched);
      sample = inpaint_sample(oracle, item.x0, item.label, item.mask, sched, options);
    }
    const auto stem = output_stem(manifest.entries[i], i);
    write_npy(out_dir / (stem + "_sample.npy"), sample);
    write_png_rgb(out_dir / (stem + "_sample.png"), to_rgb(sample));
  });
}

EvalResult run_eval(const Manifest& gt, const Manifest& pred, int workers) {
  if (gt.entries.size() != pred.entries.size()) {
    throw ConfigError("ground-truth and prediction manifests list different numbers of images");
  }
  const auto n = gt.entries.size();
  std::vector<std::optional<ImageStats>> stats(n);
  EvalResult result;
  result.batch = for_each_entry(gt, workers, [&](std::size_t i) {
    stats[i] = image_stats(load_label(gt, gt.entries[i]), load_label(pred, pred.entries[i]));
  });
  json per_image = json::array();
  std::vector<ImageStats> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!stats[i]) continue;
    auto rec = scores_json(scores_from(*stats[i]));
    rec["gt"] = gt.entries[i].instance_map;
    rec["pred"] = pred.entries[i].instance_map;
    rec["DQ"] = stats[i]->pq.dq();
    rec["SQ"] = stats[i]->pq.sq();
    per_image.push_back(std::move(rec));
    ok.push_back(*stats[i]);
  }
  result.report = json{{"per_image", per_image}, {"pooled", scores_json(aggregate_instancewise(ok))}};
  return result;
}

}  // namespace nucleoforge
