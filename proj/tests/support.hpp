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

// Random fixtures and slow reference implementations shared by the unit and
// acceptance tests. The references are written from the definitions and
// share no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "nucleoforge/labelcore.hpp"
#include "nucleoforge/rng.hpp"

namespace nftest {

using namespace nucleoforge;

/// Up to `max_instances` random ellipses painted in sequence (later ones
/// overwrite); every instance has one class.
inline InstanceLabelMap random_label(Rng& rng, int height, int width, int max_instances, int n_classes,
                                     int max_radius = 4) {
  InstanceLabelMap label(height, width);
  const int n = static_cast<int>(rng.uniform_int(0, max_instances));
  for (int k = 1; k <= n; ++k) {
    const double cr = rng.uniform(0, height);
    const double cc = rng.uniform(0, width);
    const double rr = rng.uniform(0.6, max_radius);
    const double rc = rng.uniform(0.6, max_radius);
    const auto cls = static_cast<std::int32_t>(rng.uniform_int(1, n_classes));
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double dr = (r - cr) / rr;
        const double dc = (c - cc) / rc;
        if (dr * dr + dc * dc <= 1.0) {
          label.instance_ids(r, c) = k;
          label.class_ids(r, c) = cls;
        }
      }
    }
  }
  return label;
}

/// Prediction-like map: instances of `gt` shifted by up to one pixel, some
/// dropped, some relabeled in class, plus a few spurious blobs; instance IDs
/// are permuted.
inline InstanceLabelMap perturb(const InstanceLabelMap& gt, Rng& rng, int n_classes) {
  InstanceLabelMap out(gt.height(), gt.width());
  std::set<std::int32_t> ids(gt.instance_ids.values().begin(), gt.instance_ids.values().end());
  ids.erase(0);
  std::int32_t next_id = 1;
  std::map<std::int32_t, std::int32_t> new_id;
  std::map<std::int32_t, std::int32_t> new_cls;
  std::map<std::int32_t, std::pair<int, int>> shift;
  for (auto id : ids) {
    if (rng.uniform() < 0.15) continue;
    new_id[id] = next_id + static_cast<std::int32_t>(rng.uniform_int(0, 3)) * 100;
    ++next_id;
    new_cls[id] = rng.uniform() < 0.2 ? static_cast<std::int32_t>(rng.uniform_int(1, n_classes)) : 0;
    shift[id] = {static_cast<int>(rng.uniform_int(-1, 1)), static_cast<int>(rng.uniform_int(-1, 1))};
  }
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      const auto id = gt.instance_ids(r, c);
      if (id == 0 || !new_id.contains(id)) continue;
      const auto [dr, dc] = shift[id];
      if (!out.instance_ids.contains(r + dr, c + dc)) continue;
      out.instance_ids(r + dr, c + dc) = new_id[id];
      out.class_ids(r + dr, c + dc) = new_cls[id] ? new_cls[id] : gt.class_ids(r, c);
    }
  }
  auto extra = random_label(rng, gt.height(), gt.width(), 2, n_classes, 3);
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (extra.instance_ids(r, c) == 0) continue;
      out.instance_ids(r, c) = 1000 + extra.instance_ids(r, c);
      out.class_ids(r, c) = extra.class_ids(r, c);
    }
  }
  return out;
}

inline std::vector<std::int32_t> ids_of(const Grid<std::int32_t>& g) {
  std::set<std::int32_t> s(g.values().begin(), g.values().end());
  s.erase(0);
  return {s.begin(), s.end()};
}

inline std::uint64_t area_of(const Grid<std::int32_t>& g, std::int32_t id) {
  return static_cast<std::uint64_t>(std::count(g.values().begin(), g.values().end(), id));
}

inline std::uint64_t overlap_of(const Grid<std::int32_t>& a, std::int32_t ida, const Grid<std::int32_t>& b,
                                std::int32_t idb) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a.values()[i] == ida && b.values()[i] == idb) ? 1 : 0;
  return n;
}

inline double iou_of(const Grid<std::int32_t>& a, std::int32_t ida, const Grid<std::int32_t>& b, std::int32_t idb) {
  const auto inter = overlap_of(a, ida, b, idb);
  return static_cast<double>(inter) / static_cast<double>(area_of(a, ida) + area_of(b, idb) - inter);
}

// ---------------------------------------------------------------- labelcore

/// Pull-based raster: each canvas pixel asks every nucleus whether its
/// translated footprint covers it and keeps the smallest (then lowest ID).
inline InstanceLabelMap painter_oracle(const InstanceLabelMap& src, const std::map<std::int32_t, Offset>& offsets) {
  InstanceLabelMap out(src.height(), src.width());
  const auto ids = ids_of(src.instance_ids);
  std::map<std::int32_t, std::uint64_t> area;
  for (auto id : ids) area[id] = area_of(src.instance_ids, id);
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      std::int32_t best = 0;
      for (auto id : ids) {
        const auto off = offsets.at(id);
        const int sr = r - off.drow;
        const int sc = c - off.dcol;
        if (!src.instance_ids.contains(sr, sc) || src.instance_ids(sr, sc) != id) continue;
        if (best == 0 || area[id] < area[best] || (area[id] == area[best] && id < best)) best = id;
      }
      if (best == 0) continue;
      out.instance_ids(r, c) = best;
      for (std::size_t i = 0; i < src.instance_ids.size(); ++i) {
        if (src.instance_ids.values()[i] == best) {
          out.class_ids(r, c) = src.class_ids.values()[i];
          break;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------- iim

/// Contact sets from per-pixel chessboard distances to every instance.
/// A background pixel within `max_iters` of some instance belongs to all
/// instances at the minimal distance.
inline std::map<std::int32_t, std::vector<Point>> chessboard_contacts(const InstanceLabelMap& label, int max_iters) {
  const auto& g = label.instance_ids;
  const auto ids = ids_of(g);
  Grid<std::vector<std::int32_t>> owner(g.height(), g.width());
  Grid<int> claimed(g.height(), g.width(), 0);
  for (int r = 0; r < g.height(); ++r) {
    for (int c = 0; c < g.width(); ++c) {
      if (g(r, c) != 0) {
        owner(r, c) = {g(r, c)};
        claimed(r, c) = 1;
        continue;
      }
      int best = std::numeric_limits<int>::max();
      std::vector<std::int32_t> who;
      for (auto id : ids) {
        int d = std::numeric_limits<int>::max();
        for (int rr = 0; rr < g.height(); ++rr)
          for (int cc = 0; cc < g.width(); ++cc)
            if (g(rr, cc) == id) d = std::min(d, std::max(std::abs(rr - r), std::abs(cc - c)));
        if (d < best) {
          best = d;
          who = {id};
        } else if (d == best) {
          who.push_back(id);
        }
      }
      if (best <= max_iters) {
        owner(r, c) = who;
        claimed(r, c) = 1;
      }
    }
  }
  std::map<std::int32_t, std::set<Point>> sets;
  for (auto id : ids) sets[id];
  for (int r = 0; r < g.height(); ++r) {
    for (int c = 0; c < g.width(); ++c) {
      if (!claimed(r, c)) continue;
      if (owner(r, c).size() > 1) {
        for (auto id : owner(r, c)) sets[id].insert({r, c});
        continue;
      }
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr;
          const int nc = c + dc;
          if ((dr == 0 && dc == 0) || !g.contains(nr, nc) || !claimed(nr, nc)) continue;
          if (owner(nr, nc).size() == 1 && owner(nr, nc)[0] != owner(r, c)[0]) {
            sets[owner(r, c)[0]].insert({r, c});
            sets[owner(nr, nc)[0]].insert({r, c});
          }
        }
      }
    }
  }
  std::map<std::int32_t, std::vector<Point>> out;
  for (auto& [id, s] : sets) out[id] = {s.begin(), s.end()};
  return out;
}

/// Dilation as "some set pixel within chessboard radius k".
inline Grid<std::uint8_t> dilate_oracle(const Grid<std::uint8_t>& mask, int k) {
  Grid<std::uint8_t> out(mask.height(), mask.width(), 0);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      for (int rr = std::max(0, r - k); rr <= std::min(mask.height() - 1, r + k) && !out(r, c); ++rr)
        for (int cc = std::max(0, c - k); cc <= std::min(mask.width() - 1, c + k); ++cc)
          if (mask(rr, cc)) {
            out(r, c) = 1;
            break;
          }
  return out;
}

// ------------------------------------------------------------------ metrics

/// AJI following the published pseudocode line by line: every GT takes the
/// best-IoU prediction over all predictions, used or not. A prediction with
/// no overlap is never selected.
inline double aji_oracle(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  const auto gids = ids_of(gt);
  const auto pids = ids_of(pred);
  std::uint64_t C = 0;
  std::uint64_t U = 0;
  std::set<std::int32_t> used;
  for (auto g : gids) {
    std::int32_t best = 0;
    double best_iou = 0.0;
    for (auto p : pids) {
      const double v = iou_of(gt, g, pred, p);
      if (v > best_iou) {
        best_iou = v;
        best = p;
      }
    }
    if (best == 0) {
      U += area_of(gt, g);
      continue;
    }
    const auto inter = overlap_of(gt, g, pred, best);
    C += inter;
    U += area_of(gt, g) + area_of(pred, best) - inter;
    used.insert(best);
  }
  for (auto p : pids)
    if (!used.contains(p)) U += area_of(pred, p);
  if (U == 0) return 1.0;
  return static_cast<double>(C) / static_cast<double>(U);
}

struct PqOracle {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double iou_sum = 0.0;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;

  double pq() const {
    const double denom = tp + 0.5 * (fp + fn);
    if (denom == 0.0) return 1.0;
    const double dq = tp / denom;
    const double sq = tp ? iou_sum / tp : 0.0;
    return dq * sq;
  }
};

/// Exhaustive search over all one-to-one assignments, keeping the one with
/// the most IoU > 0.5 pairs (then the largest IoU sum).
inline PqOracle pq_exhaustive(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  const auto gids = ids_of(gt);
  const auto pids = ids_of(pred);
  std::vector<std::vector<double>> iou(gids.size(), std::vector<double>(pids.size()));
  for (std::size_t i = 0; i < gids.size(); ++i)
    for (std::size_t j = 0; j < pids.size(); ++j) iou[i][j] = iou_of(gt, gids[i], pred, pids[j]);
  PqOracle best;
  std::vector<bool> taken(pids.size(), false);
  std::vector<int> choice(gids.size(), -1);
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (i == gids.size()) {
      PqOracle cur;
      for (std::size_t k = 0; k < gids.size(); ++k) {
        if (choice[k] < 0) continue;
        ++cur.tp;
        cur.iou_sum += iou[k][static_cast<std::size_t>(choice[k])];
        cur.pairs.emplace_back(gids[k], pids[static_cast<std::size_t>(choice[k])]);
      }
      if (cur.tp > best.tp || (cur.tp == best.tp && cur.iou_sum > best.iou_sum)) best = cur;
      return;
    }
    choice[i] = -1;
    self(self, i + 1);
    for (std::size_t j = 0; j < pids.size(); ++j) {
      if (taken[j] || !(iou[i][j] > 0.5)) continue;
      taken[j] = true;
      choice[i] = static_cast<int>(j);
      self(self, i + 1);
      taken[j] = false;
      choice[i] = -1;
    }
  };
  visit(visit, 0);
  best.fn = gids.size() - best.tp;
  best.fp = pids.size() - best.tp;
  return best;
}

/// Per-class TP/FP/FN from an explicit confusion matrix over matched pairs,
/// with row/column 0 holding unmatched instances.
inline std::map<std::int32_t, std::array<std::uint64_t, 3>> confusion_oracle(const InstanceLabelMap& gt,
                                                                            const InstanceLabelMap& pred) {
  auto class_of = [](const InstanceLabelMap& m, std::int32_t id) {
    for (std::size_t i = 0; i < m.instance_ids.size(); ++i)
      if (m.instance_ids.values()[i] == id) return m.class_ids.values()[i];
    return 0;
  };
  const auto match = pq_exhaustive(gt.instance_ids, pred.instance_ids);
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> confusion;
  std::set<std::int32_t> mg;
  std::set<std::int32_t> mp;
  for (auto [g, p] : match.pairs) {
    ++confusion[{class_of(gt, g), class_of(pred, p)}];
    mg.insert(g);
    mp.insert(p);
  }
  for (auto g : ids_of(gt.instance_ids))
    if (!mg.contains(g)) ++confusion[{class_of(gt, g), 0}];
  for (auto p : ids_of(pred.instance_ids))
    if (!mp.contains(p)) ++confusion[{0, class_of(pred, p)}];
  std::map<std::int32_t, std::array<std::uint64_t, 3>> out;  // tp, fp, fn
  for (auto [key, n] : confusion) {
    auto [cg, cp] = key;
    if (cg == cp) {
      out[cg][0] += n;
    } else {
      if (cg) out[cg][2] += n;
      if (cp) out[cp][1] += n;
    }
  }
  return out;
}

// ------------------------------------------------------------------- files

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Every regular file under `dir`, keyed by relative path.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nucleoforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace nftest
