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

// DDPM scheduling and masked inpainting. Step indices are 1-based (t = 1..T)
// in every public function; schedule arrays are stored 0-based.

#include <cstdint>
#include <span>
#include <vector>

#include "nucleoforge/grid.hpp"
#include "nucleoforge/labelcore.hpp"
#include "nucleoforge/rng.hpp"

namespace nucleoforge {

/// channels x height x width reals, channel-major. Image data lives in [-1, 1].
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int ch, int row, int col) { return data_[index(ch, row, col)]; }
  double operator()(int ch, int row, int col) const { return data_[index(ch, row, col)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t index(int ch, int row, int col) const noexcept {
    return (static_cast<std::size_t>(ch) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(row)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

Tensor standard_normal(int channels, int height, int width, Rng& rng);

struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma2;

  double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
  double alpha_at(int t) const { return alpha.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar_at(int t) const { return alpha_bar.at(static_cast<std::size_t>(t - 1)); }
  double sigma2_at(int t) const { return sigma2.at(static_cast<std::size_t>(t - 1)); }
};

/// Builds alpha, alpha_bar and sigma2 (= beta) from an explicit beta table.
NoiseSchedule schedule_from_betas(std::vector<double> beta);

/// Betas linearly interpolated from beta_first to beta_last over `steps`.
NoiseSchedule linear_schedule(int steps, double beta_first, double beta_last);

/// Noise predictor conditioned on the structural label, the internuclear mask
/// and the step index. Implementations must be deterministic.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Tensor predict(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int t) const = 0;
};

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched);

/// q_sample inside the mask, x0 untouched outside it; the mask broadcasts
/// over channels.
Tensor masked_q_sample(const Tensor& x0, const MaskGrid& mask, int t, const Tensor& eps,
                       const NoiseSchedule& sched);

/// Mean over all elements of (w * (eps - prediction))^2 where w is 1 inside
/// the mask and `complement_weight` outside it.
double training_loss(const Denoiser& denoiser, const Tensor& x0, const StructuralLabel& sem, const MaskGrid& mask,
                     int t, const Tensor& eps, const NoiseSchedule& sched, double complement_weight = 0.0);

/// Reverse step mean plus sigma_t z. With `z == nullptr`, or at t = 1, the
/// mean is returned.
Tensor p_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& sched,
              const Tensor* z = nullptr);

/// x_prev inside the mask, x0 outside it.
Tensor repaint_step(const Tensor& x_prev, const Tensor& x0, const MaskGrid& mask);

struct SamplingOptions {
  std::uint64_t seed = 0;
  bool deterministic = false;  // z = 0 at every reverse step
  bool invert_mask = false;    // regenerate outside the mask instead of inside
};

/// Masked forward noising to step T, then T reverse steps each followed by
/// replacement of the known region from x0. Throws on non-finite predictions,
/// naming the step.
Tensor inpaint_sample(const Denoiser& denoiser, const Tensor& x0, const StructuralLabel& sem, const MaskGrid& mask,
                      const NoiseSchedule& sched, const SamplingOptions& options);

/// Returns the exact noise (x_t - sqrt(alpha_bar_t) x0) / sqrt(1 - alpha_bar_t)
/// for a fixed clean image. Test fixture and reconstruction reference.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(Tensor x0, NoiseSchedule sched) : x0_(std::move(x0)), sched_(std::move(sched)) {}

  Tensor predict(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int t) const override;

 private:
  Tensor x0_;
  NoiseSchedule sched_;
};

MaskGrid complement(const MaskGrid& mask);

}  // namespace nucleoforge
