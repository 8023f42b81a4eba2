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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nucleoforge/diffusion.hpp"
#include "nucleoforge/iim.hpp"
#include "nucleoforge/labelcore.hpp"
#include "nucleoforge/metrics.hpp"
#include "nucleoforge/nmm.hpp"
#include "nucleoforge/pipeline.hpp"
#include "nucleoforge/synth.hpp"

namespace py = pybind11;
using namespace nucleoforge;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Grid<T> to_grid(const Array<T>& a, const char* what) {
  if (a.ndim() != 2) throw py::value_error(std::string(what) + " must be a 2-D array");
  Grid<T> g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.values().begin());
  return g;
}

template <typename T>
Array<T> from_grid(const Grid<T>& g) {
  Array<T> out({g.height(), g.width()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

Tensor to_tensor(const Array<double>& a) {
  if (a.ndim() != 3) throw py::value_error("tensor must be a (channels, height, width) array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), t.values().begin());
  return t;
}

Array<double> from_tensor(const Tensor& t) {
  Array<double> out({t.channels(), t.height(), t.width()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

InstanceLabelMap to_label(const Array<std::int32_t>& inst, const Array<std::int32_t>& cls) {
  InstanceLabelMap m;
  m.instance_ids = to_grid(inst, "instance map");
  m.class_ids = to_grid(cls, "class map");
  validate(m);
  return m;
}

py::tuple from_label(const InstanceLabelMap& m) {
  return py::make_tuple(from_grid(m.instance_ids), from_grid(m.class_ids));
}

py::dict plan_dict(const MigrationPlan& plan) {
  py::list per;
  for (const auto& m : plan.per_nucleus) {
    py::dict d;
    d["id"] = m.nucleus_id;
    d["displacement"] = m.displacement;
    d["offset"] = py::make_tuple(m.offset.drow, m.offset.dcol);
    per.append(d);
  }
  py::dict d;
  d["direction"] = py::make_tuple(plan.direction.drow, plan.direction.dcol);
  d["shared_distance"] = plan.shared_distance;
  d["ref_area"] = plan.ref_area;
  d["nuclei"] = per;
  return d;
}

py::tuple migration_result(const InstanceLabelMap& label, const MigrationPlan& plan) {
  const auto out = apply_migration(label, plan);
  return py::make_tuple(from_grid(out.label.instance_ids), from_grid(out.label.class_ids), plan_dict(plan),
                        out.dropped_ids);
}

NoiseSchedule schedule_of(const Array<double>& betas) {
  if (betas.ndim() != 1) throw py::value_error("betas must be 1-D");
  return schedule_from_betas(std::vector<double>(betas.data(), betas.data() + betas.size()));
}

py::dict scores_dict(const DatasetScores& s) {
  py::dict d;
  d["bAJI"] = s.b_aji;
  d["bPQ"] = s.b_pq;
  d["mAJI"] = s.m_aji;
  d["mPQ"] = s.m_pq;
  d["F1"] = s.f1;
  d["mF1"] = s.m_f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "NucleoForge core operations on numpy arrays";
  py::register_exception<Error>(m, "NucleoForgeError", PyExc_ValueError);

  m.def(
      "extract_instances",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls) {
        py::list out;
        for (const auto& n : extract_instances(to_label(inst, cls))) {
          py::dict d;
          d["id"] = n.id;
          d["class_id"] = n.class_id;
          d["area"] = n.area();
          d["centroid"] = py::make_tuple(n.centroid_row, n.centroid_col);
          d["bbox"] = py::make_tuple(n.bbox.top, n.bbox.left, n.bbox.bottom, n.bbox.right);
          out.append(d);
        }
        return out;
      },
      py::arg("instance_map"), py::arg("class_map"));

  m.def(
      "structural_label",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls) {
        const auto s = compute_structural_label(to_label(inst, cls));
        return py::make_tuple(from_grid(s.sem), from_grid(s.hdist), from_grid(s.vdist));
      },
      py::arg("instance_map"), py::arg("class_map"), "Returns (semantic, hdist, vdist).");

  m.def("patch_origins", [](int h, int w, int size, int stride) {
    std::vector<std::pair<int, int>> out;
    for (const auto& o : patch_origins(h, w, size, stride)) out.emplace_back(o.row, o.col);
    return out;
  }, py::arg("height"), py::arg("width"), py::arg("size") = 256, py::arg("stride") = 164);

  m.def(
      "migrate",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls, double delta_x,
         std::pair<double, double> direction, const std::string& ref_area) {
        const auto label = to_label(inst, cls);
        const auto nuclei = extract_instances(label);
        const auto plan = plan_migration(nuclei, delta_x, {direction.first, direction.second},
                                         RefAreaPolicy::parse(ref_area).resolve(nuclei));
        return migration_result(label, plan);
      },
      py::arg("instance_map"), py::arg("class_map"), py::arg("delta_x"), py::arg("direction"),
      py::arg("ref_area") = "1", "Returns (instance_map, class_map, plan, dropped_ids).");

  m.def(
      "random_migrate",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls, std::uint64_t seed, double delta_x_min,
         double delta_x_max, const std::string& ref_area) {
        const auto label = to_label(inst, cls);
        const auto nuclei = extract_instances(label);
        Rng rng(seed);
        const auto plan = sample_migration(nuclei, delta_x_min, delta_x_max, RefAreaPolicy::parse(ref_area), rng);
        return migration_result(label, plan);
      },
      py::arg("instance_map"), py::arg("class_map"), py::arg("seed") = 0, py::arg("delta_x_min") = 30.0,
      py::arg("delta_x_max") = 100.0, py::arg("ref_area") = "1");

  m.def(
      "constrained_dilate",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls, int max_iters) {
        std::map<std::int32_t, std::vector<std::pair<int, int>>> out;
        for (const auto& [id, pts] : constrained_dilate(to_label(inst, cls), max_iters))
          for (const auto& p : pts) out[id].emplace_back(p.row, p.col);
        return out;
      },
      py::arg("instance_map"), py::arg("class_map"), py::arg("max_iters") = kDefaultMaxIters);

  m.def(
      "internuclear_mask",
      [](const Array<std::int32_t>& inst, const Array<std::int32_t>& cls, int halo_iters, int max_iters) {
        return from_grid(internuclear_mask(to_label(inst, cls), halo_iters, max_iters).mask);
      },
      py::arg("instance_map"), py::arg("class_map"), py::arg("halo_iters") = kDefaultHaloIters,
      py::arg("max_iters") = kDefaultMaxIters);

  m.def(
      "linear_betas",
      [](int steps, double first, double last) {
        const auto s = linear_schedule(steps, first, last);
        Array<double> out(static_cast<py::ssize_t>(s.beta.size()));
        std::copy(s.beta.begin(), s.beta.end(), out.mutable_data());
        return out;
      },
      py::arg("steps") = 50, py::arg("beta_first") = 1e-4, py::arg("beta_last") = 0.2);

  m.def(
      "q_sample",
      [](const Array<double>& x0, int t, const Array<double>& eps, const Array<double>& betas) {
        return from_tensor(q_sample(to_tensor(x0), t, to_tensor(eps), schedule_of(betas)));
      },
      py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("betas"));

  m.def(
      "masked_q_sample",
      [](const Array<double>& x0, const Array<std::uint8_t>& mask, int t, const Array<double>& eps,
         const Array<double>& betas) {
        return from_tensor(
            masked_q_sample(to_tensor(x0), to_grid(mask, "mask"), t, to_tensor(eps), schedule_of(betas)));
      },
      py::arg("x0"), py::arg("mask"), py::arg("t"), py::arg("eps"), py::arg("betas"));

  m.def(
      "p_step",
      [](const Array<double>& x_t, int t, const Array<double>& eps_hat, const Array<double>& betas,
         std::optional<Array<double>> z) {
        std::optional<Tensor> noise;
        if (z) noise = to_tensor(*z);
        return from_tensor(p_step(to_tensor(x_t), t, to_tensor(eps_hat), schedule_of(betas),
                                  noise ? &*noise : nullptr));
      },
      py::arg("x_t"), py::arg("t"), py::arg("eps_hat"), py::arg("betas"), py::arg("z") = py::none());

  m.def(
      "repaint_step",
      [](const Array<double>& x_prev, const Array<double>& x0, const Array<std::uint8_t>& mask) {
        return from_tensor(repaint_step(to_tensor(x_prev), to_tensor(x0), to_grid(mask, "mask")));
      },
      py::arg("x_prev"), py::arg("x0"), py::arg("mask"));

  m.def(
      "oracle_inpaint",
      [](const Array<double>& x0, const Array<std::uint8_t>& mask, const Array<double>& betas, std::uint64_t seed,
         bool deterministic, bool invert_mask) {
        const auto x = to_tensor(x0);
        const auto sched = schedule_of(betas);
        const StructuralLabel sem{Grid<std::int32_t>(x.height(), x.width()), Grid<double>(x.height(), x.width()),
                                  Grid<double>(x.height(), x.width())};
        const OracleDenoiser oracle(x, sched);
        return from_tensor(
            inpaint_sample(oracle, x, sem, to_grid(mask, "mask"), sched, {seed, deterministic, invert_mask}));
      },
      py::arg("x0"), py::arg("mask"), py::arg("betas"), py::arg("seed") = 0, py::arg("deterministic") = true,
      py::arg("invert_mask") = false, "Inpainting driven by the closed-form noise oracle for x0.");

  m.def(
      "aji",
      [](const Array<std::int32_t>& gt, const Array<std::int32_t>& pred) {
        return aji_counts(to_grid(gt, "gt"), to_grid(pred, "pred")).score();
      },
      py::arg("gt"), py::arg("pred"));

  m.def(
      "panoptic_quality",
      [](const Array<std::int32_t>& gt, const Array<std::int32_t>& pred) {
        const auto c = pq_counts(to_grid(gt, "gt"), to_grid(pred, "pred"));
        return py::make_tuple(c.dq(), c.sq(), c.pq());
      },
      py::arg("gt"), py::arg("pred"), "Returns (DQ, SQ, PQ).");

  m.def(
      "scores",
      [](const Array<std::int32_t>& gt_inst, const Array<std::int32_t>& gt_cls, const Array<std::int32_t>& pred_inst,
         const Array<std::int32_t>& pred_cls) {
        return scores_dict(scores_from(image_stats(to_label(gt_inst, gt_cls), to_label(pred_inst, pred_cls))));
      },
      py::arg("gt_instance_map"), py::arg("gt_class_map"), py::arg("pred_instance_map"), py::arg("pred_class_map"),
      "Binary and class-aware AJI/PQ plus per-class F1 for one image.");

  m.def(
      "synth_label",
      [](int height, int width, int n_classes, double density, std::uint64_t seed) {
        Rng rng(seed);
        const auto s = synth_label(height, width, n_classes, density, rng);
        return py::make_tuple(from_grid(s.label.instance_ids), from_grid(s.label.class_ids), s.placed);
      },
      py::arg("height") = 256, py::arg("width") = 256, py::arg("n_classes") = 3, py::arg("density") = 2.0,
      py::arg("seed") = 0, "Returns (instance_map, class_map, placed).");

  m.def(
      "evaluate",
      [](const std::filesystem::path& gt_manifest, const std::filesystem::path& pred_manifest, int workers) {
        const auto r = run_eval(read_manifest(gt_manifest), read_manifest(pred_manifest), workers);
        return py::module_::import("json").attr("loads")(r.report.dump());
      },
      py::arg("gt_manifest"), py::arg("pred_manifest"), py::arg("workers") = 1);
}
