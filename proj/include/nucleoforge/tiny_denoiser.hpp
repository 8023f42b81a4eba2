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
#include <span>
#include <vector>

#include "nucleoforge/diffusion.hpp"

namespace nucleoforge {

/// Shallow convolutional noise predictor:
///
///   hidden_h = tanh(W1_h . patch(p) + w_tau_h * t/T + b1_h)
///   eps_c(p) = W2_c . hidden + b2_c + skip_c * x_t(c, p)
///
/// where patch(p) gathers, over a (2r+1)^2 window with zero padding, the
/// channels of x_t plus mask, sem / num_classes, hdist and vdist.
struct TinyDenoiserArch {
  int channels = 1;
  int hidden = 16;
  int kernel_radius = 1;
  int num_classes = 1;
  int steps = 50;

  int features_per_pixel() const { return channels + 4; }
  int window() const { return (2 * kernel_radius + 1) * (2 * kernel_radius + 1); }
  std::size_t parameter_count() const;

  bool operator==(const TinyDenoiserArch&) const = default;
};

struct TrainingItem {
  Tensor x0;
  StructuralLabel label;
  MaskGrid mask;
};

class TinyDenoiser final : public Denoiser {
 public:
  explicit TinyDenoiser(TinyDenoiserArch arch);
  TinyDenoiser(TinyDenoiserArch arch, std::vector<double> params);

  /// Small random initial weights drawn from `rng`.
  static TinyDenoiser initialized(TinyDenoiserArch arch, Rng& rng);

  const TinyDenoiserArch& arch() const noexcept { return arch_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  Tensor predict(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int t) const override;

  /// Masked training loss for one item (same definition as training_loss) and
  /// its analytic gradient, accumulated into `grad` scaled by `grad_scale`.
  double loss_and_gradient(const TrainingItem& item, int t, const Tensor& eps, const NoiseSchedule& sched,
                           double complement_weight, std::span<double> grad, double grad_scale = 1.0) const;

 private:
  void gather(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int row, int col,
              std::vector<double>& features) const;

  TinyDenoiserArch arch_;
  std::vector<double> params_;
};

struct TrainOptions {
  int iterations = 2000;
  double learning_rate = 1e-2;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double complement_weight = 0.0;
};

struct TrainResult {
  TinyDenoiser model;
  std::vector<double> loss_curve;  // mean batch loss per iteration, before the update
};

/// Adam on the masked noise-prediction loss. Each iteration draws items, step
/// indices and noise from a generator seeded with `options.seed`. Throws,
/// naming the iteration, if the loss becomes non-finite.
TrainResult train_tiny_denoiser(std::span<const TrainingItem> dataset, const NoiseSchedule& sched,
                                TinyDenoiserArch arch, const TrainOptions& options);

}  // namespace nucleoforge
