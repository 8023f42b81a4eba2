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

#include "nucleoforge/tiny_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nucleoforge {
namespace {

// Parameter layout: W1[H][in] | w_tau[H] | b1[H] | W2[C][H] | b2[C] | skip[C]
struct Layout {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t channels = 0;
  std::size_t w1 = 0;
  std::size_t w_tau = 0;
  std::size_t b1 = 0;
  std::size_t w2 = 0;
  std::size_t b2 = 0;
  std::size_t skip = 0;
  std::size_t total = 0;

  explicit Layout(const TinyDenoiserArch& a)
      : in(static_cast<std::size_t>(a.features_per_pixel() * a.window())),
        hidden(static_cast<std::size_t>(a.hidden)),
        channels(static_cast<std::size_t>(a.channels)) {
    w1 = 0;
    w_tau = w1 + hidden * in;
    b1 = w_tau + hidden;
    w2 = b1 + hidden;
    b2 = w2 + channels * hidden;
    skip = b2 + channels;
    total = skip + channels;
  }
};

void check_arch(const TinyDenoiserArch& a) {
  if (a.channels < 1 || a.hidden < 1 || a.kernel_radius < 0 || a.num_classes < 1 || a.steps < 1) {
    throw Error("invalid tiny denoiser architecture");
  }
}

void check_inputs(const TinyDenoiserArch& a, const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask,
                  int t) {
  if (x_t.channels() != a.channels) throw Error("tiny denoiser: channel count mismatch");
  if (!mask.same_shape(x_t.height(), x_t.width()) || !sem.sem.same_shape(mask) || !sem.hdist.same_shape(mask) ||
      !sem.vdist.same_shape(mask)) {
    throw Error("tiny denoiser: conditioning shape mismatch");
  }
  if (t < 1 || t > a.steps) throw Error("tiny denoiser: step " + std::to_string(t) + " out of range");
}

}  // namespace

std::size_t TinyDenoiserArch::parameter_count() const { return Layout(*this).total; }

TinyDenoiser::TinyDenoiser(TinyDenoiserArch arch) : arch_(arch) {
  check_arch(arch_);
  params_.assign(arch_.parameter_count(), 0.0);
}

TinyDenoiser::TinyDenoiser(TinyDenoiserArch arch, std::vector<double> params)
    : arch_(arch), params_(std::move(params)) {
  check_arch(arch_);
  if (params_.size() != arch_.parameter_count()) {
    throw Error("tiny denoiser expects " + std::to_string(arch_.parameter_count()) + " parameters, got " +
                std::to_string(params_.size()));
  }
}

TinyDenoiser TinyDenoiser::initialized(TinyDenoiserArch arch, Rng& rng) {
  TinyDenoiser model(arch);
  const Layout l(arch);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(l.in + 1));
  const double out_scale = 0.1 / std::sqrt(static_cast<double>(l.hidden));
  auto p = model.params_.data();
  for (std::size_t i = l.w1; i < l.b1; ++i) p[i] = in_scale * rng.normal();
  for (std::size_t i = l.w2; i < l.b2; ++i) p[i] = out_scale * rng.normal();
  return model;
}

void TinyDenoiser::gather(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int row, int col,
                          std::vector<double>& features) const {
  const int r = arch_.kernel_radius;
  const int per = arch_.features_per_pixel();
  const double class_scale = 1.0 / static_cast<double>(arch_.num_classes);
  std::size_t j = 0;
  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      const int rr = row + dr;
      const int cc = col + dc;
      if (!mask.contains(rr, cc)) {
        std::fill_n(features.begin() + static_cast<std::ptrdiff_t>(j), per, 0.0);
        j += static_cast<std::size_t>(per);
        continue;
      }
      for (int ch = 0; ch < arch_.channels; ++ch) features[j++] = x_t(ch, rr, cc);
      features[j++] = mask(rr, cc) ? 1.0 : 0.0;
      features[j++] = sem.sem(rr, cc) * class_scale;
      features[j++] = sem.hdist(rr, cc);
      features[j++] = sem.vdist(rr, cc);
    }
  }
}

Tensor TinyDenoiser::predict(const Tensor& x_t, const StructuralLabel& sem, const MaskGrid& mask, int t) const {
  check_inputs(arch_, x_t, sem, mask, t);
  const Layout l(arch_);
  const double tau = static_cast<double>(t) / static_cast<double>(arch_.steps);
  std::vector<double> features(l.in);
  std::vector<double> hidden(l.hidden);
  Tensor out(x_t.channels(), x_t.height(), x_t.width());
  const double* p = params_.data();
  for (int row = 0; row < x_t.height(); ++row) {
    for (int col = 0; col < x_t.width(); ++col) {
      gather(x_t, sem, mask, row, col, features);
      for (std::size_t h = 0; h < l.hidden; ++h) {
        double z = p[l.w_tau + h] * tau + p[l.b1 + h];
        const double* w = p + l.w1 + h * l.in;
        for (std::size_t j = 0; j < l.in; ++j) z += w[j] * features[j];
        hidden[h] = std::tanh(z);
      }
      for (std::size_t c = 0; c < l.channels; ++c) {
        double v = p[l.b2 + c] + p[l.skip + c] * x_t(static_cast<int>(c), row, col);
        const double* w = p + l.w2 + c * l.hidden;
        for (std::size_t h = 0; h < l.hidden; ++h) v += w[h] * hidden[h];
        out(static_cast<int>(c), row, col) = v;
      }
    }
  }
  return out;
}

double TinyDenoiser::loss_and_gradient(const TrainingItem& item, int t, const Tensor& eps,
                                       const NoiseSchedule& sched, double complement_weight, std::span<double> grad,
                                       double grad_scale) const {
  if (grad.size() != params_.size()) throw Error("gradient buffer has the wrong size");
  if (sched.steps != arch_.steps) throw Error("schedule length differs from the denoiser's step count");
  const Tensor x_t = masked_q_sample(item.x0, item.mask, t, eps, sched);
  check_inputs(arch_, x_t, item.label, item.mask, t);

  const Layout l(arch_);
  const double tau = static_cast<double>(t) / static_cast<double>(arch_.steps);
  const double n = static_cast<double>(x_t.size());
  std::vector<double> features(l.in);
  std::vector<double> hidden(l.hidden);
  std::vector<double> delta(l.hidden);
  std::vector<double> upstream(l.channels);
  const double* p = params_.data();
  double total = 0.0;
  for (int row = 0; row < x_t.height(); ++row) {
    for (int col = 0; col < x_t.width(); ++col) {
      gather(x_t, item.label, item.mask, row, col, features);
      for (std::size_t h = 0; h < l.hidden; ++h) {
        double z = p[l.w_tau + h] * tau + p[l.b1 + h];
        const double* w = p + l.w1 + h * l.in;
        for (std::size_t j = 0; j < l.in; ++j) z += w[j] * features[j];
        hidden[h] = std::tanh(z);
      }
      const double weight = item.mask(row, col) ? 1.0 : complement_weight;
      for (std::size_t c = 0; c < l.channels; ++c) {
        const int ch = static_cast<int>(c);
        double v = p[l.b2 + c] + p[l.skip + c] * x_t(ch, row, col);
        const double* w = p + l.w2 + c * l.hidden;
        for (std::size_t h = 0; h < l.hidden; ++h) v += w[h] * hidden[h];
        const double residual = eps(ch, row, col) - v;
        total += weight * weight * residual * residual;
        upstream[c] = -2.0 * weight * weight * residual / n;
      }
      std::fill(delta.begin(), delta.end(), 0.0);
      for (std::size_t c = 0; c < l.channels; ++c) {
        const double g = upstream[c] * grad_scale;
        if (g == 0.0) continue;
        grad[l.b2 + c] += g;
        grad[l.skip + c] += g * x_t(static_cast<int>(c), row, col);
        for (std::size_t h = 0; h < l.hidden; ++h) {
          grad[l.w2 + c * l.hidden + h] += g * hidden[h];
          delta[h] += g * p[l.w2 + c * l.hidden + h];
        }
      }
      for (std::size_t h = 0; h < l.hidden; ++h) {
        const double d = delta[h] * (1.0 - hidden[h] * hidden[h]);
        if (d == 0.0) continue;
        grad[l.w_tau + h] += d * tau;
        grad[l.b1 + h] += d;
        double* gw = grad.data() + l.w1 + h * l.in;
        for (std::size_t j = 0; j < l.in; ++j) gw[j] += d * features[j];
      }
    }
  }
  return total / n;
}

TrainResult train_tiny_denoiser(std::span<const TrainingItem> dataset, const NoiseSchedule& sched,
                                TinyDenoiserArch arch, const TrainOptions& options) {
  if (dataset.empty()) throw Error("training dataset is empty");
  if (options.iterations < 0 || options.batch_size < 1) throw Error("invalid training options");
  arch.steps = sched.steps;
  Rng rng(options.seed);
  TrainResult result{TinyDenoiser::initialized(arch, rng), {}};
  auto params = result.model.parameters();
  std::vector<double> grad(params.size());
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEpsilon = 1e-8;
  result.loss_curve.reserve(static_cast<std::size_t>(options.iterations));

  for (int it = 0; it < options.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    const double scale = 1.0 / static_cast<double>(options.batch_size);
    for (int b = 0; b < options.batch_size; ++b) {
      const auto& item = dataset[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1))];
      const int t = static_cast<int>(rng.uniform_int(1, sched.steps));
      const Tensor eps = standard_normal(item.x0.channels(), item.x0.height(), item.x0.width(), rng);
      batch_loss += scale * result.model.loss_and_gradient(item, t, eps, sched, options.complement_weight, grad, scale);
    }
    if (!std::isfinite(batch_loss)) throw Error("training diverged at iteration " + std::to_string(it));
    result.loss_curve.push_back(batch_loss);

    const double bias1 = 1.0 - std::pow(kBeta1, it + 1);
    const double bias2 = 1.0 - std::pow(kBeta2, it + 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= options.learning_rate * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + kEpsilon);
    }
  }
  return result;
}

}  // namespace nucleoforge
