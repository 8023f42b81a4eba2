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

#include "nucleoforge/diffusion.hpp"

#include <cmath>
#include <string>

namespace nucleoforge {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": tensor shape mismatch");
}

void require_mask_shape(const Tensor& x, const MaskGrid& mask, const char* what) {
  if (!mask.same_shape(x.height(), x.width())) throw Error(std::string(what) + ": mask shape mismatch");
}

void require_step(const NoiseSchedule& sched, int t, const char* what) {
  if (t < 1 || t > sched.steps) {
    throw Error(std::string(what) + ": step " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps) + "]");
  }
}

}  // namespace

Tensor::Tensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) throw Error("tensor dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
               fill);
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor standard_normal(int channels, int height, int width, Rng& rng) {
  Tensor out(channels, height, width);
  for (auto& v : out.values()) v = rng.normal();
  return out;
}

NoiseSchedule schedule_from_betas(std::vector<double> beta) {
  if (beta.empty()) throw Error("schedule needs at least one step");
  NoiseSchedule s;
  s.steps = static_cast<int>(beta.size());
  s.alpha.resize(beta.size());
  s.alpha_bar.resize(beta.size());
  double running = 1.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!(beta[i] > 0.0 && beta[i] < 1.0)) throw Error("beta values must lie in (0, 1)");
    s.alpha[i] = 1.0 - beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
  }
  s.sigma2 = beta;
  s.beta = std::move(beta);
  return s;
}

NoiseSchedule linear_schedule(int steps, double beta_first, double beta_last) {
  if (steps < 1) throw Error("schedule needs at least one step");
  if (!(beta_first > 0.0 && beta_first <= beta_last && beta_last < 1.0)) {
    throw Error("linear schedule requires 0 < beta_1 <= beta_T < 1");
  }
  std::vector<double> beta(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    beta[static_cast<std::size_t>(i)] = beta_first + (beta_last - beta_first) * frac;
  }
  return schedule_from_betas(std::move(beta));
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "q_sample");
  require_step(sched, t, "q_sample");
  const double signal = std::sqrt(sched.alpha_bar_at(t));
  const double noise = std::sqrt(1.0 - sched.alpha_bar_at(t));
  Tensor out(x0.channels(), x0.height(), x0.width());
  auto dst = out.values();
  auto a = x0.values();
  auto e = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = signal * a[i] + noise * e[i];
  return out;
}

Tensor masked_q_sample(const Tensor& x0, const MaskGrid& mask, int t, const Tensor& eps,
                       const NoiseSchedule& sched) {
  require_mask_shape(x0, mask, "masked_q_sample");
  const Tensor noised = q_sample(x0, t, eps, sched);
  Tensor out = x0;
  for (int ch = 0; ch < x0.channels(); ++ch)
    for (int r = 0; r < x0.height(); ++r)
      for (int c = 0; c < x0.width(); ++c)
        if (mask(r, c)) out(ch, r, c) = noised(ch, r, c);
  return out;
}

double training_loss(const Denoiser& denoiser, const Tensor& x0, const StructuralLabel& sem, const MaskGrid& mask,
                     int t, const Tensor& eps, const NoiseSchedule& sched, double complement_weight) {
  const Tensor x_t = masked_q_sample(x0, mask, t, eps, sched);
  const Tensor pred = denoiser.predict(x_t, sem, mask, t);
  require_same_shape(eps, pred, "training_loss");
  if (!pred.all_finite()) throw Error("training_loss: denoiser produced non-finite values at step " + std::to_string(t));
  double total = 0.0;
  for (int ch = 0; ch < eps.channels(); ++ch) {
    for (int r = 0; r < eps.height(); ++r) {
      for (int c = 0; c < eps.width(); ++c) {
        const double w = mask(r, c) ? 1.0 : complement_weight;
        const double d = w * (eps(ch, r, c) - pred(ch, r, c));
        total += d * d;
      }
    }
  }
  return eps.size() == 0 ? 0.0 : total / static_cast<double>(eps.size());
}

Tensor p_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& sched, const Tensor* z) {
  require_same_shape(x_t, eps_hat, "p_step");
  require_step(sched, t, "p_step");
  if (z != nullptr) require_same_shape(x_t, *z, "p_step");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
  const double eps_coef = sched.beta_at(t) / std::sqrt(1.0 - sched.alpha_bar_at(t));
  const double sigma = std::sqrt(sched.sigma2_at(t));
  const bool add_noise = z != nullptr && t > 1;
  Tensor out(x_t.channels(), x_t.height(), x_t.width());
  auto dst = out.values();
  auto x = x_t.values();
  auto e = eps_hat.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = inv_sqrt_alpha * (x[i] - eps_coef * e[i]);
    if (add_noise) dst[i] += sigma * z->values()[i];
  }
  return out;
}

Tensor repaint_step(const Tensor& x_prev, const Tensor& x0, const MaskGrid& mask) {
  require_same_shape(x_prev, x0, "repaint_step");
  require_mask_shape(x0, mask, "repaint_step");
  Tensor out = x0;
  for (int ch = 0; ch < x0.channels(); ++ch)
    for (int r = 0; r < x0.height(); ++r)
      for (int c = 0; c < x0.width(); ++c)
        if (mask(r, c)) out(ch, r, c) = x_prev(ch, r, c);
  return out;
}

MaskGrid complement(const MaskGrid& mask) {
  MaskGrid out(mask.height(), mask.width());
  auto src = mask.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 0 : 1;
  return out;
}

Tensor inpaint_sample(const Denoiser& denoiser, const Tensor& x0, const StructuralLabel& sem, const MaskGrid& mask,
                      const NoiseSchedule& sched, const SamplingOptions& options) {
  require_mask_shape(x0, mask, "inpaint_sample");
  const MaskGrid region = options.invert_mask ? complement(mask) : mask;
  Rng rng(options.seed);
  const Tensor eps = standard_normal(x0.channels(), x0.height(), x0.width(), rng);
  Tensor x = masked_q_sample(x0, region, sched.steps, eps, sched);
  for (int t = sched.steps; t >= 1; --t) {
    const Tensor eps_hat = denoiser.predict(x, sem, mask, t);
    if (!eps_hat.same_shape(x)) throw Error("inpaint_sample: denoiser changed the tensor shape at step " + std::to_string(t));
    if (!eps_hat.all_finite()) throw Error("inpaint_sample: denoiser produced non-finite values at step " + std::to_string(t));
    Tensor prev;
    if (options.deterministic || t == 1) {
      prev = p_step(x, t, eps_hat, sched);
    } else {
      const Tensor z = standard_normal(x0.channels(), x0.height(), x0.width(), rng);
      prev = p_step(x, t, eps_hat, sched, &z);
    }
    x = repaint_step(prev, x0, region);
  }
  return x;
}

Tensor OracleDenoiser::predict(const Tensor& x_t, const StructuralLabel&, const MaskGrid&, int t) const {
  require_same_shape(x_t, x0_, "OracleDenoiser");
  require_step(sched_, t, "OracleDenoiser");
  const double signal = std::sqrt(sched_.alpha_bar_at(t));
  const double noise = std::sqrt(1.0 - sched_.alpha_bar_at(t));
  Tensor out(x_t.channels(), x_t.height(), x_t.width());
  auto dst = out.values();
  auto x = x_t.values();
  auto a = x0_.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (x[i] - signal * a[i]) / noise;
  return out;
}

}  // namespace nucleoforge
