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

#include "nucleoforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "nucleoforge/parallel.hpp"

namespace nucleoforge {
namespace {

constexpr int kPlacementAttempts = 64;

std::vector<Point> ellipse_pixels(double cy, double cx, double semi_a, double semi_b, double theta) {
  std::vector<Point> pixels;
  const double reach = std::max(semi_a, semi_b);
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  for (int r = static_cast<int>(std::floor(cy - reach)); r <= static_cast<int>(std::ceil(cy + reach)); ++r) {
    for (int c = static_cast<int>(std::floor(cx - reach)); c <= static_cast<int>(std::ceil(cx + reach)); ++c) {
      const double dx = c - cx;
      const double dy = r - cy;
      const double u = (dx * cs + dy * sn) / semi_a;
      const double v = (-dx * sn + dy * cs) / semi_b;
      if (u * u + v * v <= 1.0) pixels.push_back({r, c});
    }
  }
  if (pixels.empty()) pixels.push_back({static_cast<int>(std::lround(cy)), static_cast<int>(std::lround(cx))});
  return pixels;
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SynthLabel synth_label(int height, int width, int n_classes, double density, Rng& rng) {
  if (height < 4 || width < 4) throw Error("synthetic images must be at least 4x4");
  if (n_classes < 1) throw Error("n_classes must be >= 1");
  if (!(density > 0.0) || !std::isfinite(density)) throw Error("density must be > 0");

  SynthLabel out{InstanceLabelMap(height, width), 0, 0};
  const double pixels = static_cast<double>(height) * static_cast<double>(width);
  out.requested = std::max(1, static_cast<int>(std::lround(density * pixels / 1000.0)));
  const double area_max = std::min(400.0, pixels / 10.0);
  const double area_min = std::max(2.0, area_max / 20.0);
  const double log_span = std::log(area_max / area_min);

  for (int n = 0; n < out.requested; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const double frac = rng.uniform();
      const double area = area_min * std::exp(frac * log_span);
      const double aspect = rng.uniform(1.0, 2.0);
      const double semi_a = std::sqrt(area * aspect / std::numbers::pi);
      const double semi_b = std::sqrt(area / (aspect * std::numbers::pi));
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double cy = rng.uniform(0.0, height - 1.0);
      const double cx = rng.uniform(0.0, width - 1.0);
      const double pick = rng.uniform();
      const auto pixels_of = ellipse_pixels(cy, cx, semi_a, semi_b, theta);
      const bool fits = std::all_of(pixels_of.begin(), pixels_of.end(), [&](const Point& p) {
        return out.label.instance_ids.contains(p.row, p.col) && out.label.instance_ids(p) == 0;
      });
      if (!fits) continue;
      // Class follows size, with a quarter of nuclei assigned at random.
      int cls = 1 + std::min(n_classes - 1, static_cast<int>(frac * n_classes));
      if (pick < 0.25) cls = 1 + static_cast<int>(rng.uniform_int(0, n_classes - 1));
      const int id = ++out.placed;
      for (const auto& p : pixels_of) {
        out.label.instance_ids(p) = id;
        out.label.class_ids(p) = cls;
      }
      placed = true;
    }
    if (!placed) break;
  }
  return out;
}

RgbImage render_image(const InstanceLabelMap& label, Rng& rng) {
  static constexpr std::array<std::array<double, 3>, 6> kPalette{{
      {95, 45, 140},
      {60, 30, 110},
      {130, 70, 160},
      {80, 55, 125},
      {110, 40, 120},
      {70, 60, 150},
  }};
  const auto structural = compute_structural_label(label);
  RgbImage image(label.height(), label.width());
  for (int r = 0; r < label.height(); ++r) {
    for (int c = 0; c < label.width(); ++c) {
      const double noise = rng.normal() * 6.0;
      auto& px = image(r, c);
      if (label.instance_ids(r, c) == 0) {
        px = {clamp_byte(232 + noise), clamp_byte(190 + noise), clamp_byte(210 + noise)};
        continue;
      }
      const auto& base = kPalette[static_cast<std::size_t>(label.class_ids(r, c) - 1) % kPalette.size()];
      const double h = structural.hdist(r, c);
      const double v = structural.vdist(r, c);
      const double shade = 1.0 - 0.2 * (h * h + v * v) / 2.0;
      px = {clamp_byte(base[0] * shade + noise), clamp_byte(base[1] * shade + noise),
            clamp_byte(base[2] * shade + noise)};
    }
  }
  return image;
}

SynthReport synth_dataset(const fs::path& out_dir, const SynthOptions& options, int workers) {
  if (options.n_images < 0) throw Error("n_images must be >= 0");
  fs::create_directories(out_dir);
  const auto n = static_cast<std::size_t>(options.n_images);
  SynthReport report;
  report.entries.resize(n);
  std::vector<std::string> warnings(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      char stem[32];
      std::snprintf(stem, sizeof stem, "%04zu", i);
      Rng rng(derive_seed(options.seed, i));
      const auto synth = synth_label(options.height, options.width, options.n_classes, options.density, rng);
      const auto image = render_image(synth.label, rng);
      ManifestEntry e{std::string("img_") + stem + ".png", std::string("inst_") + stem + ".png",
                      std::string("cls_") + stem + ".png"};
      write_png_rgb(out_dir / e.image, image);
      save_label(out_dir / e.instance_map, out_dir / e.class_map, synth.label);
      report.entries[i] = e;
      if (synth.placed < synth.requested) {
        warnings[i] = "image " + std::string(stem) + ": placed " + std::to_string(synth.placed) + " of " +
                      std::to_string(synth.requested) + " nuclei (density infeasible)";
      }
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  for (auto& w : warnings)
    if (!w.empty()) report.warnings.push_back(std::move(w));
  write_manifest(out_dir / "manifest.json", report.entries);
  return report;
}

}  // namespace nucleoforge
