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

#include "nucleoforge/nmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace nucleoforge {

Offset round_offset(double displacement, Direction direction) {
  // std::round is half-away-from-zero.
  return {static_cast<int>(std::round(displacement * direction.drow)),
          static_cast<int>(std::round(displacement * direction.dcol))};
}

MigrationPlan plan_migration(std::span<const Nucleus> nuclei, double delta_x, Direction direction,
                             double ref_area) {
  if (!(delta_x >= 0.0) || !std::isfinite(delta_x)) throw Error("migration distance must be finite and >= 0");
  if (!(ref_area > 0.0) || !std::isfinite(ref_area)) throw Error("reference area must be finite and > 0");
  const double norm = std::hypot(direction.drow, direction.dcol);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("migration direction must be a nonzero vector");

  MigrationPlan plan;
  plan.direction = {direction.drow / norm, direction.dcol / norm};
  plan.shared_distance = delta_x;
  plan.ref_area = ref_area;
  plan.per_nucleus.reserve(nuclei.size());
  for (const auto& n : nuclei) {
    if (n.area() == 0) throw Error("nucleus " + std::to_string(n.id) + " has zero area");
    const double dx = delta_x * ref_area / static_cast<double>(n.area());
    plan.per_nucleus.push_back({n.id, dx, round_offset(dx, plan.direction)});
  }
  return plan;
}

std::vector<std::size_t> smaller_on_top(std::span<const Nucleus> nuclei) {
  std::vector<std::size_t> order(nuclei.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (nuclei[a].area() != nuclei[b].area()) return nuclei[a].area() < nuclei[b].area();
    return nuclei[a].id < nuclei[b].id;
  });
  return order;
}

ComposeResult apply_migration(const InstanceLabelMap& label, const MigrationPlan& plan) {
  const auto nuclei = extract_instances(label);
  std::set<std::int32_t> ids;
  for (const auto& n : nuclei) ids.insert(n.id);
  std::map<std::int32_t, Offset> offset_of;
  for (const auto& m : plan.per_nucleus) {
    if (!ids.contains(m.nucleus_id)) throw Error("migration plan references unknown instance " + std::to_string(m.nucleus_id));
    offset_of[m.nucleus_id] = m.offset;
  }
  std::vector<Offset> offsets;
  offsets.reserve(nuclei.size());
  for (const auto& n : nuclei) {
    const auto it = offset_of.find(n.id);
    if (it == offset_of.end()) throw Error("migration plan does not cover instance " + std::to_string(n.id));
    offsets.push_back(it->second);
  }
  const auto priority = smaller_on_top(nuclei);
  return compose_label(nuclei, offsets, label.height(), label.width(), priority);
}

RefAreaPolicy RefAreaPolicy::parse(const std::string& text) {
  if (text == "mean") return {Kind::Mean, 0.0};
  if (text == "1") return {Kind::Literal, 1.0};
  double value = 0.0;
  std::istringstream in(text);
  in >> value;
  if (!in || !in.eof() || !(value > 0.0) || !std::isfinite(value)) {
    throw Error("ref-area must be '1', 'mean' or a positive number, got '" + text + "'");
  }
  if (value == 1.0) return {Kind::Literal, 1.0};
  return {Kind::Fixed, value};
}

std::string RefAreaPolicy::to_string() const {
  switch (kind) {
    case Kind::Literal:
      return "1";
    case Kind::Mean:
      return "mean";
    case Kind::Fixed: {
      std::ostringstream out;
      out.precision(17);
      out << value;
      return out.str();
    }
  }
  return "1";
}

double RefAreaPolicy::resolve(std::span<const Nucleus> nuclei) const {
  switch (kind) {
    case Kind::Literal:
      return 1.0;
    case Kind::Fixed:
      return value;
    case Kind::Mean: {
      if (nuclei.empty()) return 1.0;
      double total = 0.0;
      for (const auto& n : nuclei) total += static_cast<double>(n.area());
      return total / static_cast<double>(nuclei.size());
    }
  }
  return 1.0;
}

MigrationPlan sample_migration(std::span<const Nucleus> nuclei, double delta_min, double delta_max,
                               const RefAreaPolicy& ref_area, Rng& rng) {
  if (delta_min > delta_max) throw Error("delta-x range is empty (min > max)");
  const double delta_x = rng.uniform(delta_min, delta_max);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return plan_migration(nuclei, delta_x, {std::sin(angle), std::cos(angle)}, ref_area.resolve(nuclei));
}

}  // namespace nucleoforge
