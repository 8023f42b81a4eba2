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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: acceptance <path to nucleoforge CLI>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "nucleoforge/diffusion.hpp"
#include "nucleoforge/iim.hpp"
#include "nucleoforge/metrics.hpp"
#include "nucleoforge/nmm.hpp"
#include "nucleoforge/pipeline.hpp"
#include "nucleoforge/synth.hpp"
#include "nucleoforge/tiny_denoiser.hpp"
#include "support.hpp"

using namespace nucleoforge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail;
  line.precision(3);
  line << std::fixed << " [" << secs << " s";
  if (limit_s > 0) line << " / limit " << limit_s << " s";
  line << "]";
  if (!in_time) line << " too slow";
  std::cout << line.str() << std::endl;
}

long round_half_away(double v) { return v < 0 ? -static_cast<long>(-v + 0.5) : static_cast<long>(v + 0.5); }

Outcome nmm_law() {
  Rng rng(1001);
  long pairs = 0, violations = 0, offsets = 0, mismatches = 0;
  for (int img = 0; img < 100; ++img) {
    const auto synth = synth_label(96, 96, 3, 3.0, rng);
    const auto nuclei = extract_instances(synth.label);
    const auto plan = sample_migration(nuclei, 30.0, 100.0, RefAreaPolicy{}, rng);
    const auto mean_plan = plan_migration(nuclei, plan.shared_distance, plan.direction,
                                          RefAreaPolicy::parse("mean").resolve(nuclei));
    for (const auto* p : {&plan, &mean_plan}) {
      for (std::size_t a = 0; a < nuclei.size(); ++a) {
        const auto& m = p->per_nucleus[a];
        const double dx = p->shared_distance * p->ref_area / static_cast<double>(nuclei[a].area());
        ++offsets;
        if (m.offset.drow != round_half_away(dx * p->direction.drow) ||
            m.offset.dcol != round_half_away(dx * p->direction.dcol) || m.displacement != dx)
          ++mismatches;
        for (std::size_t b = 0; b < nuclei.size(); ++b) {
          if (nuclei[a].area() >= nuclei[b].area()) continue;
          ++pairs;
          if (!(std::abs(m.displacement) > std::abs(p->per_nucleus[b].displacement))) ++violations;
        }
      }
    }
  }
  std::ostringstream d;
  d << pairs << " ordered pairs, " << violations << " monotonicity violations; " << offsets << " offsets, "
    << mismatches << " differ from hand arithmetic";
  return {violations == 0 && mismatches == 0 && pairs > 0, d.str()};
}

Outcome occlusion() {
  Rng rng(1002);
  long migrations = 0, nuclei_seen = 0, smaller_hidden = 0, lost = 0, stolen = 0, forced = 0;
  while (migrations < 1000) {
    const auto synth = synth_label(64, 64, 3, 4.0, rng);
    const auto nuclei = extract_instances(synth.label);
    const auto policy = migrations % 2 ? RefAreaPolicy::parse("mean") : RefAreaPolicy::parse("1");
    const auto plan = sample_migration(nuclei, 30.0, 100.0, policy, rng);
    const auto out = apply_migration(synth.label, plan);
    ++migrations;
    std::map<std::int32_t, std::size_t> area_of;
    for (const auto& n : nuclei) area_of[n.id] = n.area();
    std::map<std::int32_t, std::size_t> kept;
    for (auto v : out.label.instance_ids.values())
      if (v) ++kept[v];
    for (std::size_t k = 0; k < nuclei.size(); ++k) {
      const auto& n = nuclei[k];
      const auto off = plan.per_nucleus[k].offset;
      bool in_bounds = false;
      bool taken_by_larger = false;
      std::set<std::int32_t> covering;
      for (const auto& p : n.pixels) {
        const int r = p.row + off.drow, c = p.col + off.dcol;
        if (!out.label.instance_ids.contains(r, c)) continue;
        in_bounds = true;
        const auto owner = out.label.instance_ids(r, c);
        covering.insert(owner);
        if (owner != n.id && area_of[owner] > n.area()) taken_by_larger = true;
      }
      if (!in_bounds) continue;
      ++nuclei_seen;
      if (taken_by_larger) ++stolen;
      if (!kept.contains(n.id)) {
        ++lost;
        bool all_larger = true;
        bool all_smaller = true;
        for (auto o : covering) {
          all_larger = all_larger && area_of[o] > n.area();
          all_smaller = all_smaller && area_of[o] < n.area();
        }
        if (all_larger) ++smaller_hidden;
        if (all_smaller) ++forced;
      }
    }
  }
  std::ostringstream d;
  d << migrations << " migrations, " << nuclei_seen << " in-bounds nuclei; fully hidden by larger: " << smaller_hidden
    << ", pixels taken by a larger nucleus: " << stolen << ", nuclei left with no pixel: " << lost << " (" << forced
    << " of them entirely covered by strictly smaller nuclei, where keeping a pixel would hand it to a larger one)";
  return {smaller_hidden == 0 && stolen == 0 && lost == 0, d.str()};
}

Outcome imc_equivalence() {
  Rng rng(1003);
  int equal = 0;
  long contact_pixels = 0;
  double dilate_secs = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto label = nftest::random_label(rng, 32, 32, 7, 3, 5);
    const int max_iters = trial < 100 ? kDefaultMaxIters : static_cast<int>(rng.uniform_int(1, 15));
    const auto t0 = std::chrono::steady_clock::now();
    const auto got = constrained_dilate(label, max_iters);
    dilate_secs += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto want = nftest::chessboard_contacts(label, max_iters);
    bool same = got.size() == want.size();
    for (const auto& [id, pts] : got) {
      contact_pixels += static_cast<long>(pts.size());
      same = same && want.contains(id) && want.at(id) == pts;
    }
    equal += same;
  }
  std::ostringstream d;
  d << equal << "/200 maps bit-identical to the chessboard nearest-instance reference (" << contact_pixels
    << " contact pixels; dilation itself " << dilate_secs << " s)";
  return {equal == 200, d.str()};
}

Outcome diffusion_algebra() {
  Rng rng(1004);
  const auto sched = linear_schedule(50, 1e-4, 0.2);
  double worst = 0.0;
  bool zero_mask_exact = true;
  auto rel = [](double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); };
  for (int k = 0; k < 50; ++k) {
    const int c = static_cast<int>(rng.uniform_int(1, 3)), h = static_cast<int>(rng.uniform_int(2, 12)),
              w = static_cast<int>(rng.uniform_int(2, 12));
    Tensor x0(c, h, w), xp(c, h, w);
    for (auto& v : x0.values()) v = rng.uniform(-1, 1);
    for (auto& v : xp.values()) v = rng.uniform(-1, 1);
    const auto eps = standard_normal(c, h, w, rng);
    const auto z = standard_normal(c, h, w, rng);
    MaskGrid m(h, w);
    for (auto& v : m.values()) v = rng.uniform() < 0.5;
    const int t = static_cast<int>(rng.uniform_int(1, 50));
    const double ab = sched.alpha_bar_at(t), a = sched.alpha_at(t), b = sched.beta_at(t);
    const auto q = q_sample(x0, t, eps, sched);
    const auto mq = masked_q_sample(x0, m, t, eps, sched);
    const auto ps = p_step(xp, t, eps, sched, &z);
    const auto rp = repaint_step(xp, x0, m);
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
          const double qv = std::sqrt(ab) * x0(ch, r, col) + std::sqrt(1 - ab) * eps(ch, r, col);
          worst = std::max(worst, rel(q(ch, r, col), qv));
          worst = std::max(worst, rel(mq(ch, r, col), m(r, col) ? qv : x0(ch, r, col)));
          double mu = (xp(ch, r, col) - b / std::sqrt(1 - ab) * eps(ch, r, col)) / std::sqrt(a);
          if (t > 1) mu += std::sqrt(b) * z(ch, r, col);
          worst = std::max(worst, rel(ps(ch, r, col), mu));
          worst = std::max(worst, rel(rp(ch, r, col), m(r, col) ? xp(ch, r, col) : x0(ch, r, col)));
        }
    zero_mask_exact = zero_mask_exact && masked_q_sample(x0, MaskGrid(h, w, 0), t, eps, sched) == x0;
  }
  std::ostringstream d;
  d << "50 tensors, worst relative deviation " << worst << " (tolerance 1e-6); zero mask returns x0 bit-exactly: "
    << (zero_mask_exact ? "yes" : "no");
  return {worst < 1e-6 && zero_mask_exact, d.str()};
}

Outcome oracle_reconstruction() {
  Rng rng(1005);
  const auto sched = linear_schedule(50, 1e-4, 0.2);
  const StructuralLabel sem{Grid<std::int32_t>(8, 8), Grid<double>(8, 8), Grid<double>(8, 8)};
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Tensor x0(1, 8, 8);
    for (auto& v : x0.values()) v = rng.uniform(-1, 1);
    MaskGrid mask(8, 8, 1);
    if (k % 2) for (auto& v : mask.values()) v = rng.uniform() < 0.5;
    const OracleDenoiser oracle(x0, sched);
    const auto out = inpaint_sample(oracle, x0, sem, mask, sched, {static_cast<std::uint64_t>(k), true, false});
    for (std::size_t i = 0; i < x0.size(); ++i) worst = std::max(worst, std::abs(out.values()[i] - x0.values()[i]));
  }
  std::ostringstream d;
  d << "20 inputs of 1x8x8, T=50, max abs error " << worst << " (tolerance 1e-3)";
  return {worst < 1e-3, d.str()};
}

Outcome toy_training() {
  const auto dir = nftest::fresh_dir("acceptance_train");
  SynthOptions opts;
  opts.n_images = 16;
  opts.height = 48;
  opts.width = 48;
  opts.density = 4.0;
  opts.seed = 1006;
  synth_dataset(dir, opts, 1);
  const auto manifest = read_manifest(dir / "manifest.json");
  PipelineConfig config;
  config.train.crop = 16;
  const auto items = build_training_items(config, manifest);
  std::size_t masked = 0;
  for (const auto& it : items)
    for (auto v : it.mask.values()) masked += v != 0;
  const auto sched = config.schedule.build();
  TinyDenoiserArch arch;
  arch.num_classes = 3;
  const auto result = train_tiny_denoiser(items, sched, arch, {2000, 1e-2, 4, 1006, 0.0});
  const std::span<const double> curve(result.loss_curve);
  auto mean = [](std::span<const double> s) { return std::accumulate(s.begin(), s.end(), 0.0) / s.size(); };
  const double first = mean(curve.first(200));
  const double last = mean(curve.last(200));

  // Finite differences on the 10-parameter fixture.
  Rng rng(1007);
  const TinyDenoiserArch ten{1, 1, 0, 3, sched.steps};
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> p(ten.parameter_count());
    for (auto& v : p) v = rng.uniform(-0.8, 0.8);
    const auto& item = items[static_cast<std::size_t>(trial)];
    const int t = static_cast<int>(rng.uniform_int(1, sched.steps));
    const auto eps = standard_normal(1, 16, 16, rng);
    std::vector<double> grad(p.size(), 0.0), scratch(p.size());
    TinyDenoiser(ten, p).loss_and_gradient(item, t, eps, sched, 0.0, grad);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto up = p, down = p;
      up[i] += 1e-4;
      down[i] -= 1e-4;
      const double fd = (TinyDenoiser(ten, up).loss_and_gradient(item, t, eps, sched, 0.0, scratch) -
                         TinyDenoiser(ten, down).loss_and_gradient(item, t, eps, sched, 0.0, scratch)) /
                        2e-4;
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8}));
    }
  }
  std::ostringstream d;
  d << "16 images 1x16x16 (" << masked << " masked px), 2000 iterations: first-decile loss " << first
    << ", final-decile " << last << " (ratio " << last / first << ", need < 0.5); 10-parameter gradient worst relative error "
    << worst << " (need < 1e-3)";
  return {last < 0.5 * first && worst < 1e-3 && masked > 0, d.str()};
}

Outcome metrics_oracles() {
  Rng rng(1008);
  double worst = 0.0;
  int count_mismatch = 0;
  for (int k = 0; k < 500; ++k) {
    const auto gt = nftest::random_label(rng, 16, 16, 6, 3);
    const auto pred = nftest::perturb(gt, rng, 3);
    worst = std::max(worst, std::abs(aji(gt, pred) - nftest::aji_oracle(gt.instance_ids, pred.instance_ids)));
    const auto ref = nftest::pq_exhaustive(gt.instance_ids, pred.instance_ids);
    worst = std::max(worst, std::abs(panoptic_quality(gt, pred).pq - ref.pq()));
    const auto conf = nftest::confusion_oracle(gt, pred);
    const auto f1 = classification_f1(gt, pred);
    for (const auto& [c, v] : conf) {
      const double want = 2.0 * v[0] / (2.0 * v[0] + v[1] + v[2]);
      if (!f1.per_class.contains(c)) {
        ++count_mismatch;
        continue;
      }
      worst = std::max(worst, std::abs(f1.per_class.at(c) - want));
    }
    if (f1.per_class.size() != conf.size()) ++count_mismatch;
  }
  InstanceLabelMap gt(1, 4), pred(1, 4);
  for (int c = 0; c < 4; ++c) {
    gt.instance_ids(0, c) = c < 2 ? 1 : 2;
    gt.class_ids(0, c) = pred.class_ids(0, c) = 1;
    pred.instance_ids(0, c) = 1;
  }
  const double merge_aji = aji(gt, pred);
  const double merge_pq = panoptic_quality(gt, pred).pq;
  Rng rng2(1009);
  bool identity = true;
  for (int k = 0; k < 50; ++k) {
    const auto m = nftest::random_label(rng2, 16, 16, 6, 3);
    if (nftest::ids_of(m.instance_ids).empty()) continue;
    const auto s = scores_from(image_stats(m, m));
    identity = identity && s.b_aji == 1.0 && s.b_pq == 1.0 && s.m_aji == 1.0 && s.m_pq == 1.0 && s.m_f1 == 1.0;
    for (auto [c, v] : s.f1) identity = identity && v == 1.0;
  }
  std::ostringstream d;
  d << "500 pairs, worst deviation " << worst << " (tolerance 1e-9), class-set mismatches " << count_mismatch
    << "; merge case AJI=" << merge_aji << " PQ=" << merge_pq << "; identity all ones: " << (identity ? "yes" : "no");
  return {worst <= 1e-9 && count_mismatch == 0 && merge_aji == 0.5 && merge_pq == 0.0 && identity, d.str()};
}

Outcome patch_protocol() {
  const auto origins = patch_origins(1000, 1000, 256, 164);
  Grid<std::uint8_t> covered(1000, 1000, 0);
  for (const auto& o : origins)
    for (int r = 0; r < 256; ++r)
      for (int c = 0; c < 256; ++c) covered(o.row + r, o.col + c) = 1;
  const auto missing = std::count(covered.values().begin(), covered.values().end(), 0);
  const bool starts_ok = window_starts(1000, 256, 164) == std::vector<int>{0, 164, 328, 492, 656, 744};
  std::ostringstream d;
  d << origins.size() << " patches, " << missing << " uncovered pixels, origins {0,164,328,492,656,744}: "
    << (starts_ok ? "yes" : "no");
  return {origins.size() == 36 && missing == 0 && starts_ok, d.str()};
}

Outcome cli_reproducibility(const std::string& cli) {
  const auto root = nftest::fresh_dir("acceptance_cli");
  const std::string config_path = (root / "config.json").string();
  {
    std::ofstream cfg(config_path);
    cfg << R"({"seed": 11, "patch_size": 64, "patch_stride": 40, "schedule": {"steps": 20},
              "train": {"iterations": 200, "crop": 16}})";
  }
  auto run = [&](const std::string& tag, int workers) {
    const auto dir = root / tag;
    const std::string common =
        " --config " + config_path + " --workers " + std::to_string(workers) + " 2>>" + (root / "log.txt").string();
    const std::string data = (dir / "data").string();
    const std::string man = data + "/manifest.json";
    int bad = 0;
    auto sh = [&](const std::string& cmd) {
      if (std::system((cli + " " + cmd + common).c_str()) != 0) ++bad;
    };
    sh("synth --n-images 4 --height 96 --width 96 --out-dir " + data);
    sh("augment --manifest " + man + " --out-dir " + (dir / "augment").string());
    sh("mask --manifest " + man + " --out-dir " + (dir / "mask").string());
    sh("structmap --manifest " + man + " --out-dir " + (dir / "structmap").string());
    sh("patches --manifest " + man + " --out-dir " + (dir / "patches").string());
    sh("noise-demo --manifest " + man + " --out-dir " + (dir / "noise").string());
    sh("train-toy --manifest " + man + " --out-dir " + (dir / "model").string());
    sh("sample --manifest " + man + " --model " + (dir / "model" / "denoiser.json").string() + " --out-dir " +
       (dir / "sample").string());
    sh("sample --deterministic-sampling --manifest " + man + " --out-dir " + (dir / "oracle").string());
    sh("eval --manifest " + man + " --pred " + (dir / "augment" / "manifest.json").string() + " --out-dir " +
       (dir / "eval").string() + " >" + (dir / "eval_stdout.json").string());
    return std::pair{bad, nftest::tree_contents(dir)};
  };
  const auto [bad_a, a] = run("run1_w1", 1);
  const auto [bad_b, b] = run("run2_w1", 1);
  const auto [bad_c, c] = run("run3_w4", 4);
  std::size_t differing = 0;
  for (const auto& [path, bytes] : a) {
    if (!b.contains(path) || b.at(path) != bytes) ++differing;
    if (!c.contains(path) || c.at(path) != bytes) ++differing;
  }
  differing += (a.size() != b.size()) + (a.size() != c.size());
  std::ostringstream d;
  d << "9 subcommands, " << a.size() << " files per run, runs {w1, w1, w4}: " << differing
    << " differing files, nonzero exits " << bad_a + bad_b + bad_c;
  return {differing == 0 && bad_a + bad_b + bad_c == 0 && a.size() > 50, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <nucleoforge CLI path>\n";
    return 2;
  }
  report("NMM law", 5, nmm_law);
  report("Occlusion safety", 30, occlusion);
  report("IMC reference equivalence", 10, imc_equivalence);
  report("Diffusion algebra", 0, diffusion_algebra);
  report("Oracle reconstruction", 5, oracle_reconstruction);
  report("Toy training", 120, toy_training);
  report("Metrics references", 0, metrics_oracles);
  report("Patch protocol", 0, patch_protocol);
  report("CLI reproducibility", 0, [&] { return cli_reproducibility(argv[1]); });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
