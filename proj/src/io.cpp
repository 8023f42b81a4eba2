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

#include "nucleoforge/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace nucleoforge {
namespace {

using json = nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open '" + path.string() + "'");
  return f;
}

struct DecodedPng {
  int height = 0;
  int width = 0;
  int channels = 0;   // after stripping alpha
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit big-endian
};

DecodedPng decode_png(const fs::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng: cannot allocate info struct");
  }
  DecodedPng out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("cannot decode PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.height = static_cast<int>(png_get_image_height(png, info));
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) rows[static_cast<std::size_t>(r)] = out.bytes.data() + stride * static_cast<std::size_t>(r);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode_png(const fs::path& path, int height, int width, int color_type, int bit_depth,
                const std::vector<std::uint8_t>& bytes) {
  if (height < 1 || width < 1) throw Error("cannot write an empty PNG to '" + path.string() + "'");
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng: cannot allocate info struct");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("cannot encode PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = bytes.size() / static_cast<std::size_t>(height);
  for (int r = 0; r < height; ++r)
    rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(bytes.data() + stride * static_cast<std::size_t>(r));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_gray(const fs::path& path, const Grid<std::int32_t>& grid, int bit_depth) {
  const std::int32_t max_value = bit_depth == 16 ? 65535 : 255;
  const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> bytes(grid.size() * bytes_per);
  std::size_t i = 0;
  for (auto v : grid.values()) {
    if (v < 0 || v > max_value) {
      throw Error("value " + std::to_string(v) + " does not fit a " + std::to_string(bit_depth) + "-bit PNG ('" +
                  path.string() + "')");
    }
    if (bit_depth == 16) {
      bytes[i++] = static_cast<std::uint8_t>(v >> 8);
      bytes[i++] = static_cast<std::uint8_t>(v & 0xff);
    } else {
      bytes[i++] = static_cast<std::uint8_t>(v);
    }
  }
  encode_png(path, grid.height(), grid.width(), PNG_COLOR_TYPE_GRAY, bit_depth, bytes);
}

std::string npy_header(const char* descr, std::span<const std::size_t> shape) {
  std::ostringstream dict;
  dict << "{'descr': '" << descr << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) dict << ",";
    if (i + 1 < shape.size()) dict << " ";
  }
  dict << "), }";
  std::string header = dict.str();
  // Magic (6) + version (2) + length (2) + header + '\n' padded to 64 bytes.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  return header;
}

template <typename Float>
void write_npy_impl(const fs::path& path, const char* descr, std::span<const std::size_t> shape,
                    std::span<const double> data) {
  std::size_t expected = 1;
  for (auto d : shape) expected *= d;
  if (expected != data.size()) throw Error("npy: shape does not match data length");
  const std::string header = npy_header(descr, shape);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  static_assert(std::endian::native == std::endian::little, "NPY writer assumes a little-endian host");
  for (double v : data) {
    const Float f = static_cast<Float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(Float));
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

Grid<std::int32_t> read_png_gray(const fs::path& path) {
  const auto png = decode_png(path);
  if (png.channels != 1) throw Error("expected a single-channel PNG: '" + path.string() + "'");
  Grid<std::int32_t> grid(png.height, png.width);
  auto dst = grid.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = png.bit_depth == 16 ? (png.bytes[2 * i] << 8) | png.bytes[2 * i + 1] : png.bytes[i];
  }
  return grid;
}

RgbImage read_png_rgb(const fs::path& path) {
  const auto png = decode_png(path);
  if (png.channels != 1 && png.channels != 3) throw Error("unsupported PNG channel layout: '" + path.string() + "'");
  RgbImage image(png.height, png.width);
  const std::size_t step = png.bit_depth == 16 ? 2 : 1;
  auto dst = image.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const std::size_t src_ch = png.channels == 1 ? 0 : static_cast<std::size_t>(ch);
      // 16-bit images keep their high byte.
      dst[i][static_cast<std::size_t>(ch)] = png.bytes[(i * static_cast<std::size_t>(png.channels) + src_ch) * step];
    }
  }
  return image;
}

void write_png_gray16(const fs::path& path, const Grid<std::int32_t>& grid) { write_gray(path, grid, 16); }

void write_png_gray8(const fs::path& path, const Grid<std::int32_t>& grid) { write_gray(path, grid, 8); }

void write_png_gray8(const fs::path& path, const Grid<std::uint8_t>& grid) {
  std::vector<std::uint8_t> bytes(grid.values().begin(), grid.values().end());
  encode_png(path, grid.height(), grid.width(), PNG_COLOR_TYPE_GRAY, 8, bytes);
}

void write_png_rgb(const fs::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.size() * 3);
  for (const auto& px : image.values()) bytes.insert(bytes.end(), px.begin(), px.end());
  encode_png(path, image.height(), image.width(), PNG_COLOR_TYPE_RGB, 8, bytes);
}

void write_mask_png(const fs::path& path, const MaskGrid& mask) {
  MaskGrid scaled(mask.height(), mask.width());
  auto src = mask.values();
  auto dst = scaled.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 255 : 0;
  write_png_gray8(path, scaled);
}

MaskGrid read_mask_png(const fs::path& path) {
  const auto grid = read_png_gray(path);
  MaskGrid mask(grid.height(), grid.width());
  auto src = grid.values();
  auto dst = mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 1 : 0;
  return mask;
}

void write_npy_f32(const fs::path& path, std::span<const std::size_t> shape, std::span<const double> data) {
  write_npy_impl<float>(path, "<f4", shape, data);
}

void write_npy_f64(const fs::path& path, std::span<const std::size_t> shape, std::span<const double> data) {
  write_npy_impl<double>(path, "<f8", shape, data);
}

NpyArray read_npy(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw Error("not an NPY file: '" + path.string() + "'");
  std::size_t header_len = 0;
  if (magic[6] == 1) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    header_len = len[0] | (len[1] << 8);
  } else {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    header_len = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::size_t>(len[3]) << 24);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw Error("truncated NPY header: '" + path.string() + "'");

  const bool f4 = header.find("'<f4'") != std::string::npos;
  const bool f8 = header.find("'<f8'") != std::string::npos;
  if (!f4 && !f8) throw Error("unsupported NPY dtype in '" + path.string() + "'");
  if (header.find("'fortran_order': True") != std::string::npos) throw Error("Fortran-ordered NPY not supported");
  const auto open = header.find('(');
  const auto close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos) throw Error("malformed NPY shape");
  NpyArray arr;
  std::string dims = header.substr(open + 1, close - open - 1);
  std::replace(dims.begin(), dims.end(), ',', ' ');
  std::istringstream ds(dims);
  std::size_t d = 0;
  std::size_t count = 1;
  while (ds >> d) {
    arr.shape.push_back(d);
    count *= d;
  }
  arr.data.resize(count);
  for (auto& v : arr.data) {
    if (f4) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), sizeof f);
      v = f;
    } else {
      in.read(reinterpret_cast<char*>(&v), sizeof v);
    }
  }
  if (!in) throw Error("truncated NPY data: '" + path.string() + "'");
  return arr;
}

void write_npy(const fs::path& path, const Grid<double>& grid) {
  const std::size_t shape[2] = {static_cast<std::size_t>(grid.height()), static_cast<std::size_t>(grid.width())};
  write_npy_f32(path, shape, grid.values());
}

void write_npy(const fs::path& path, const Tensor& tensor) {
  const std::size_t shape[3] = {static_cast<std::size_t>(tensor.channels()), static_cast<std::size_t>(tensor.height()),
                                static_cast<std::size_t>(tensor.width())};
  write_npy_f32(path, shape, tensor.values());
}

Tensor read_npy_tensor(const fs::path& path) {
  auto arr = read_npy(path);
  if (arr.shape.size() == 2) arr.shape.insert(arr.shape.begin(), 1);
  if (arr.shape.size() != 3) throw Error("expected a (C, H, W) or (H, W) array in '" + path.string() + "'");
  Tensor t(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]), static_cast<int>(arr.shape[2]));
  std::copy(arr.data.begin(), arr.data.end(), t.values().begin());
  return t;
}

Manifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error("invalid manifest '" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw Error("manifest '" + path.string() + "' must be a JSON array");
  Manifest m;
  m.base_dir = path.parent_path();
  for (const auto& rec : doc) {
    try {
      m.entries.push_back({rec.at("image").get<std::string>(), rec.at("instance_map").get<std::string>(),
                           rec.at("class_map").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error("invalid manifest record in '" + path.string() + "': " + e.what());
    }
  }
  return m;
}

void write_manifest(const fs::path& path, std::span<const ManifestEntry> entries) {
  json doc = json::array();
  for (const auto& e : entries) {
    doc.push_back({{"image", e.image}, {"instance_map", e.instance_map}, {"class_map", e.class_map}});
  }
  write_text(path, doc.dump(2));
}

InstanceLabelMap load_label(const Manifest& manifest, const ManifestEntry& entry) {
  InstanceLabelMap label(read_png_gray(manifest.resolve(entry.instance_map)),
                         read_png_gray(manifest.resolve(entry.class_map)));
  validate(label);
  return label;
}

void save_label(const fs::path& instance_path, const fs::path& class_path, const InstanceLabelMap& label) {
  write_png_gray16(instance_path, label.instance_ids);
  write_png_gray8(class_path, label.class_ids);
}

Tensor to_tensor(const RgbImage& image) {
  Tensor t(3, image.height(), image.width());
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c)
      for (int ch = 0; ch < 3; ++ch) t(ch, r, c) = image(r, c)[static_cast<std::size_t>(ch)] / 127.5 - 1.0;
  return t;
}

Tensor to_gray_tensor(const RgbImage& image) {
  Tensor t(1, image.height(), image.width());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const auto& px = image(r, c);
      t(0, r, c) = (px[0] + px[1] + px[2]) / (3.0 * 127.5) - 1.0;
    }
  }
  return t;
}

RgbImage to_rgb(const Tensor& tensor) {
  if (tensor.channels() != 1 && tensor.channels() != 3) throw Error("to_rgb needs a 1- or 3-channel tensor");
  RgbImage image(tensor.height(), tensor.width());
  for (int r = 0; r < tensor.height(); ++r) {
    for (int c = 0; c < tensor.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = tensor(tensor.channels() == 1 ? 0 : ch, r, c);
        const double scaled = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
        image(r, c)[static_cast<std::size_t>(ch)] = static_cast<std::uint8_t>(scaled);
      }
    }
  }
  return image;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace nucleoforge
