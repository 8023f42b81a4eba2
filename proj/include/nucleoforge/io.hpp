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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nucleoforge/diffusion.hpp"
#include "nucleoforge/grid.hpp"
#include "nucleoforge/labelcore.hpp"

namespace nucleoforge {

namespace fs = std::filesystem;

// PNG. Instance maps are 16-bit grayscale, class maps and masks 8-bit
// grayscale, images 8-bit RGB. Readers accept 8- or 16-bit grayscale for
// label grids and gray/RGB/RGBA (alpha dropped) for images.

Grid<std::int32_t> read_png_gray(const fs::path& path);
RgbImage read_png_rgb(const fs::path& path);

/// Values must fit in [0, 65535].
void write_png_gray16(const fs::path& path, const Grid<std::int32_t>& grid);
/// Values must fit in [0, 255].
void write_png_gray8(const fs::path& path, const Grid<std::int32_t>& grid);
void write_png_gray8(const fs::path& path, const Grid<std::uint8_t>& grid);
void write_png_rgb(const fs::path& path, const RgbImage& image);

/// Binary mask written as 0/255.
void write_mask_png(const fs::path& path, const MaskGrid& mask);
MaskGrid read_mask_png(const fs::path& path);

// NPY v1.0, little-endian, C order.

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

void write_npy_f32(const fs::path& path, std::span<const std::size_t> shape, std::span<const double> data);
void write_npy_f64(const fs::path& path, std::span<const std::size_t> shape, std::span<const double> data);
/// Accepts '<f4' and '<f8' C-ordered arrays.
NpyArray read_npy(const fs::path& path);

void write_npy(const fs::path& path, const Grid<double>& grid);
void write_npy(const fs::path& path, const Tensor& tensor);
Tensor read_npy_tensor(const fs::path& path);

// Dataset manifest: JSON array of {image, instance_map, class_map} with
// paths relative to the manifest's directory.

struct ManifestEntry {
  std::string image;
  std::string instance_map;
  std::string class_map;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  fs::path base_dir;
  std::vector<ManifestEntry> entries;

  fs::path resolve(const std::string& relative) const { return base_dir / relative; }
};

Manifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, std::span<const ManifestEntry> entries);

InstanceLabelMap load_label(const Manifest& manifest, const ManifestEntry& entry);
void save_label(const fs::path& instance_path, const fs::path& class_path, const InstanceLabelMap& label);

/// RGB bytes to a 3-channel tensor in [-1, 1], and back (rounded, clamped).
Tensor to_tensor(const RgbImage& image);
RgbImage to_rgb(const Tensor& tensor);
/// Single-channel tensor in [-1, 1] from the mean of the RGB channels.
Tensor to_gray_tensor(const RgbImage& image);

/// Writes `text` followed by a newline, replacing any existing file.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace nucleoforge
