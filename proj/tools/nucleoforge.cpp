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

// nucleoforge: command-line front end.
//
// Exit codes: 0 success, 1 some inputs failed, 2 bad configuration or usage.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nucleoforge/config.hpp"
#include "nucleoforge/io.hpp"
#include "nucleoforge/parallel.hpp"
#include "nucleoforge/pipeline.hpp"
#include "nucleoforge/synth.hpp"

namespace nf = nucleoforge;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitBadConfig = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta_x_min;
  std::optional<double> delta_x_max;
  std::optional<std::string> ref_area;
  std::optional<int> halo_iters;
  std::optional<int> max_iters;
  std::optional<int> patch_size;
  std::optional<int> patch_stride;
  bool invert_repaint_mask = false;
  bool deterministic_sampling = false;
  std::optional<std::string> manifest;
  std::optional<std::string> out_dir;
  bool print_config = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base random seed");
  cmd->add_option("--delta-x-min", f.delta_x_min, "Lower bound of the shared migration distance (default 30)");
  cmd->add_option("--delta-x-max", f.delta_x_max, "Upper bound of the shared migration distance (default 100)");
  cmd->add_option("--ref-area", f.ref_area, "Reference area: 1, mean, or a positive number");
  cmd->add_option("--halo-iters", f.halo_iters, "3x3 dilations applied to the contact pixels (default 2)");
  cmd->add_option("--max-iters", f.max_iters, "Growth limit of the constrained dilation (default 10)");
  cmd->add_option("--patch-size", f.patch_size, "Patch side length (default 256)");
  cmd->add_option("--patch-stride", f.patch_stride, "Patch stride (default 164)");
  cmd->add_flag("--invert-repaint-mask", f.invert_repaint_mask, "Keep denoised content outside the mask instead");
  cmd->add_flag("--deterministic-sampling", f.deterministic_sampling, "Drop the stochastic term of each reverse step");
  cmd->add_option("--manifest", f.manifest, "Dataset manifest (JSON)");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_flag("--print-config", f.print_config, "Print the effective config and exit");
  cmd->add_option("--workers", f.workers, "Worker threads (0: all cores; capped by NUCLEOFORGE_THREADS)")
      ->check(CLI::NonNegativeNumber);
}

nf::PipelineConfig effective_config(const CommonFlags& f) {
  nf::PipelineConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw nf::ConfigError("cannot parse config '" + f.config_path + "': " + e.what());
    }
    c = nf::merge_json(c, doc);
  }
  if (f.seed) c.seed = *f.seed;
  if (f.delta_x_min) c.delta_x_min = *f.delta_x_min;
  if (f.delta_x_max) c.delta_x_max = *f.delta_x_max;
  if (f.ref_area) {
    try {
      c.ref_area = nf::RefAreaPolicy::parse(*f.ref_area);
    } catch (const nf::Error& e) {
      throw nf::ConfigError(e.what());
    }
  }
  if (f.halo_iters) c.halo_iters = *f.halo_iters;
  if (f.max_iters) c.max_iters = *f.max_iters;
  if (f.patch_size) c.patch_size = *f.patch_size;
  if (f.patch_stride) c.patch_stride = *f.patch_stride;
  if (f.invert_repaint_mask) c.invert_repaint_mask = true;
  if (f.deterministic_sampling) c.deterministic_sampling = true;
  if (f.manifest) c.manifest = *f.manifest;
  if (f.out_dir) c.out_dir = *f.out_dir;
  c.validate();
  return c;
}

nf::Manifest require_manifest(const nf::PipelineConfig& c, const std::string& what = "--manifest") {
  if (c.manifest.empty()) throw nf::ConfigError(what + " is required");
  try {
    return nf::read_manifest(c.manifest);
  } catch (const nf::Error& e) {
    throw nf::ConfigError(e.what());
  }
}

int finish(const nf::BatchReport& report, const std::string& command) {
  for (const auto& f : report.failures) std::cerr << "nucleoforge " << command << ": " << f << "\n";
  std::cerr << "nucleoforge " << command << ": " << report.processed << " processed, " << report.failures.size()
            << " failed\n";
  return report.ok() ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NucleoForge: label-space augmentation for nuclear instance segmentation"};
  app.require_subcommand(1);

  CommonFlags flags;
  nf::SynthOptions synth_opts;
  std::string model_path;
  std::string pred_manifest;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth->add_option("--n-images", synth_opts.n_images, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_opts.height, "Image height")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_opts.width, "Image width")->check(CLI::PositiveNumber);
  synth->add_option("--n-classes", synth_opts.n_classes, "Number of nucleus classes")->check(CLI::PositiveNumber);
  synth->add_option("--density", synth_opts.density, "Nuclei per 1000 px^2")->check(CLI::PositiveNumber);

  auto* augment = app.add_subcommand("augment", "Migrate nuclei and emit labels, masks and structural maps");
  auto* mask = app.add_subcommand("mask", "Compute internuclear masks");
  auto* structmap = app.add_subcommand("structmap", "Compute horizontal and vertical distance maps");
  auto* patches = app.add_subcommand("patches", "Cut images and labels into overlapping patches");
  auto* noise_demo = app.add_subcommand("noise-demo", "Render forward and masked noising grids");
  auto* train_toy = app.add_subcommand("train-toy", "Train the small CPU denoiser");
  auto* sample = app.add_subcommand("sample", "Masked inpainting with a trained denoiser or the oracle");
  sample->add_option("--model", model_path, "denoiser.json from train-toy (omit for the oracle denoiser)");
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", pred_manifest, "Prediction manifest")->required();

  for (auto* cmd : {synth, augment, mask, structmap, patches, noise_demo, train_toy, sample, eval}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    const auto config = effective_config(flags);
    if (flags.print_config) {
      std::cout << nf::to_json(config).dump(2) << "\n";
      return kExitOk;
    }
    const int workers = nf::worker_count(flags.workers);
    const nf::fs::path out_dir = config.out_dir;

    if (synth->parsed()) {
      synth_opts.seed = config.seed;
      const auto report = nf::synth_dataset(out_dir, synth_opts, workers);
      for (const auto& w : report.warnings) std::cerr << "nucleoforge synth: warning: " << w << "\n";
      std::cerr << "nucleoforge synth: wrote " << report.entries.size() << " images to " << out_dir.string() << "\n";
      return kExitOk;
    }
    if (eval->parsed()) {
      const auto gt = require_manifest(config);
      nf::Manifest pred;
      try {
        pred = nf::read_manifest(pred_manifest);
      } catch (const nf::Error& e) {
        throw nf::ConfigError(e.what());
      }
      if (gt.entries.size() != pred.entries.size()) {
        throw nf::ConfigError("ground-truth and prediction manifests differ in length");
      }
      const auto result = nf::run_eval(gt, pred, workers);
      nf::fs::create_directories(out_dir);
      const std::string text = result.report.dump(2);
      nf::write_text(out_dir / "eval.json", text);
      std::cout << text << "\n";
      return finish(result.batch, "eval");
    }

    const auto manifest = require_manifest(config);
    if (augment->parsed()) return finish(nf::run_augment(config, manifest, out_dir, workers), "augment");
    if (mask->parsed()) return finish(nf::run_mask(config, manifest, out_dir, workers), "mask");
    if (structmap->parsed()) return finish(nf::run_structmap(manifest, out_dir, workers), "structmap");
    if (patches->parsed()) return finish(nf::run_patches(config, manifest, out_dir, workers), "patches");
    if (noise_demo->parsed()) return finish(nf::run_noise_demo(config, manifest, out_dir, workers), "noise-demo");
    if (train_toy->parsed()) {
      const auto report = nf::run_train_toy(config, manifest, out_dir);
      if (!report.loss_curve.empty()) {
        std::cerr << "nucleoforge train-toy: loss " << report.loss_curve.front() << " -> " << report.loss_curve.back()
                  << "\n";
      }
      return finish(report.batch, "train-toy");
    }
    if (sample->parsed()) return finish(nf::run_sample(config, manifest, out_dir, model_path, workers), "sample");
  } catch (const nf::ConfigError& e) {
    std::cerr << "nucleoforge: bad config: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "nucleoforge: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitBadConfig;
}
