#pragma once

// Dataset ingestion: the IDX container used by MNIST (pre-decompressed) and
// two small synthetic datasets with known generative factors.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/rng.hpp"
#include "hsic_infogan/tensor.hpp"

namespace hsic_infogan {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct ImageDataset {
  Tensor images;  // n x (height * width), values in [-1, 1]
  std::optional<std::vector<int>> labels;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return images.rows(); }
  std::size_t image_dim() const { return height * width; }
};

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void check_magic(std::span<const std::uint8_t> b, std::uint32_t want, const char* what) {
  if (b.size() < 4) throw LengthError(std::string(what) + ": file shorter than its magic");
  const std::uint32_t magic = read_be32(b, 0);
  if (magic != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s: bad magic 0x%08X (expected 0x%08X)", what, magic, want);
    throw FormatError(buf);
  }
}

}  // namespace detail

inline IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  detail::check_magic(bytes, kIdxImageMagic, "IDX images");
  if (bytes.size() < 16) throw LengthError("IDX images: truncated header");
  IdxImages out{detail::read_be32(bytes, 4), detail::read_be32(bytes, 8),
                detail::read_be32(bytes, 12), {}};
  const std::uint64_t payload = std::uint64_t{out.count} * out.rows * out.cols;
  if (bytes.size() - 16 != payload) {
    throw LengthError("IDX images: payload is " + std::to_string(bytes.size() - 16) +
                      " bytes, header announces " + std::to_string(payload));
  }
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

inline std::vector<std::uint8_t> write_idx_images(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, images.count);
  detail::write_be32(out, images.rows);
  detail::write_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

inline std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  detail::check_magic(bytes, kIdxLabelMagic, "IDX labels");
  if (bytes.size() < 8) throw LengthError("IDX labels: truncated header");
  const std::uint32_t count = detail::read_be32(bytes, 4);
  if (bytes.size() - 8 != count) {
    throw LengthError("IDX labels: payload is " + std::to_string(bytes.size() - 8) +
                      " bytes, header announces " + std::to_string(count));
  }
  std::vector<int> labels;
  labels.reserve(count);
  for (std::size_t i = 8; i < bytes.size(); ++i) {
    if (bytes[i] > 9) {
      throw FormatError("IDX labels: label " + std::to_string(bytes[i]) + " at index " +
                        std::to_string(i - 8) + " is outside 0..9");
    }
    labels.push_back(bytes[i]);
  }
  return labels;
}

inline std::vector<std::uint8_t> write_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  detail::write_be32(out, kIdxLabelMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

inline double normalize_pixel(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

/// Raw pixels to an n x (rows * cols) tensor in [-1, 1].
inline Tensor normalize(const IdxImages& raw) {
  const std::size_t dim = std::size_t{raw.rows} * raw.cols;
  Tensor out({raw.count, dim});
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) out[i] = normalize_pixel(raw.pixels[i]);
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

/// Loads MNIST from decompressed IDX files; `subset` keeps the first N images.
inline ImageDataset load_mnist(const std::string& images_path,
                               const std::optional<std::string>& labels_path,
                               std::optional<std::size_t> subset = std::nullopt) {
  IdxImages raw = parse_idx_images(read_file(images_path));
  std::optional<std::vector<int>> labels;
  if (labels_path) {
    labels = parse_idx_labels(read_file(*labels_path));
    if (labels->size() != raw.count) throw FormatError("MNIST image and label counts differ");
  }
  if (subset && *subset < raw.count) {
    raw.count = static_cast<std::uint32_t>(*subset);
    raw.pixels.resize(std::size_t{raw.count} * raw.rows * raw.cols);
    if (labels) labels->resize(raw.count);
  }
  if (raw.count == 0) throw FormatError("MNIST file contains no images");
  return {normalize(raw), std::move(labels), raw.rows, raw.cols};
}

/// 16x16 images on a -1 background with a 4x4 patch of +1 at a uniformly
/// drawn top-left corner (x, y) in 0..12. Label = 13 y + x.
inline ImageDataset synth_squares(std::size_t n, Rng& rng) {
  if (n == 0) throw ContractError("synth_squares: n must be positive");
  constexpr std::size_t side = 16, patch = 4, positions = side - patch + 1;
  ImageDataset ds{Tensor({n, side * side}, -1.0), std::vector<int>(n), side, side};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t x = rng.uniform_index(positions);
    const std::size_t y = rng.uniform_index(positions);
    for (std::size_t r = y; r < y + patch; ++r)
      for (std::size_t c = x; c < x + patch; ++c) ds.images.at(i, r * side + c) = 1.0;
    (*ds.labels)[i] = static_cast<int>(positions * y + x);
  }
  return ds;
}

/// Mean of component `c` of `k`: evenly spaced on the radius-2 circle,
/// starting at (2, 0).
inline std::array<double, 2> gauss_mixture_mean(std::size_t c, std::size_t k) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
  return {2.0 * std::cos(angle), 2.0 * std::sin(angle)};
}

/// Points from k isotropic Gaussians (std 0.05) around gauss_mixture_mean.
/// Stored as 1x2 "images".
inline ImageDataset synth_gauss_mixture(std::size_t n, std::size_t k, Rng& rng) {
  if (k < 2) throw ContractError("synth_gauss_mixture: need at least two components");
  if (n == 0) throw ContractError("synth_gauss_mixture: n must be positive");
  ImageDataset ds{Tensor({n, 2}), std::vector<int>(n), 1, 2};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t comp = rng.uniform_index(k);
    const auto mu = gauss_mixture_mean(comp, k);
    ds.images.at(i, 0) = mu[0] + 0.05 * rng.normal();
    ds.images.at(i, 1) = mu[1] + 0.05 * rng.normal();
    (*ds.labels)[i] = static_cast<int>(comp);
  }
  return ds;
}

}  // namespace hsic_infogan
