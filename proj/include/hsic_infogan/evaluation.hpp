#pragma once

// Latent traversal grids, held-out HSIC, and a nearest-centroid score for how
// well the categorical code separates generated images.
//
// Functions here accept any callable mapping a LatentBatch to an m x d image
// tensor, so they work on trained Generators and on hand-built toy maps alike.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsic_infogan/dataio.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/kernel_hsic.hpp"
#include "hsic_infogan/latent.hpp"
#include "hsic_infogan/networks.hpp"
#include "hsic_infogan/rng.hpp"

namespace hsic_infogan {

template <typename F>
concept ImageGenerator = requires(F f, const LatentBatch& b) {
  { f(b) } -> std::convertible_to<Tensor>;
};

inline auto as_image_generator(Generator& g) {
  return [&g](const LatentBatch& b) { return g.generate(b); };
}

struct ImageGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t cell_height = 0;
  std::size_t cell_width = 0;
  std::vector<std::uint8_t> pixels;  // (rows * cell_height) x (cols * cell_width)

  std::size_t height() const { return rows * cell_height; }
  std::size_t width() const { return cols * cell_width; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width() + x]; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// Maps [-1, 1] to 0..255 as floor((v + 1) * 127.5 + 0.5), clamped.
inline std::uint8_t to_pixel(double v) {
  const double p = std::floor((v + 1.0) * 127.5 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

/// Rows are categorical classes, columns sweep continuous code `j` over
/// [-1, 1]. z and the other continuous codes are drawn once per row.
template <ImageGenerator G>
ImageGrid traversal_grid(G&& gen, const LatentSpec& spec, std::size_t j, std::size_t steps,
                         Rng& rng, std::size_t cell_height, std::size_t cell_width) {
  if (j >= spec.cont_dim) {
    throw IndexError("continuous code index " + std::to_string(j) + " out of range");
  }
  ImageGrid grid{spec.cat_classes, steps, cell_height, cell_width, {}};
  grid.pixels.assign(grid.height() * grid.width(), 0);
  for (std::size_t r = 0; r < spec.cat_classes; ++r) {
    LatentBatch fixed = sample_latents(spec, 1, rng);
    fixed.set_class(0, r);
    const LatentBatch batch = traversal_batch(spec, TraverseContinuous{j}, steps, fixed);
    const Tensor images = gen(batch);
    if (images.rank() != 2 || images.cols() != cell_height * cell_width) {
      throw DimensionError("generator output " + shape_str(images.shape()) +
                           " does not match a " + std::to_string(cell_height) + "x" +
                           std::to_string(cell_width) + " cell");
    }
    for (std::size_t s = 0; s < steps; ++s)
      for (std::size_t y = 0; y < cell_height; ++y)
        for (std::size_t x = 0; x < cell_width; ++x)
          grid.pixels[(r * cell_height + y) * grid.width() + s * cell_width + x] =
              to_pixel(images.at(s, y * cell_width + x));
  }
  return grid;
}

/// Binary PGM: "P5\n<width> <height>\n255\n" then the pixels row-major.
inline std::vector<std::uint8_t> encode_pgm(const ImageGrid& grid) {
  const std::string header =
      "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), grid.pixels.begin(), grid.pixels.end());
  return out;
}

/// Parses the subset of PGM that encode_pgm writes. The result is a 1x1 grid
/// whose single cell is the whole image.
inline ImageGrid decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw FormatError("PGM: missing P5 magic");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    throw FormatError("PGM: malformed header");
  }
  if (maxval != 255) throw FormatError("PGM: only maxval 255 is supported");
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos || bytes.size() - pos != w * h) throw LengthError("PGM: payload size mismatch");
  ImageGrid g{1, 1, h, w, {}};
  g.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return g;
}

inline void write_pgm(const ImageGrid& grid, const std::string& path) {
  write_file(path, encode_pgm(grid));
}

inline ImageGrid read_pgm(const std::string& path) { return decode_pgm(read_file(path)); }

/// HSIC between freshly generated images and their codes.
template <ImageGenerator G>
double eval_hsic(G&& gen, const LatentSpec& spec, std::size_t n, const HsicConfig& cfg, Rng& rng) {
  if (n < 2) throw ContractError("eval_hsic needs at least two samples");
  const LatentBatch batch = sample_latents(spec, n, rng);
  const Tensor images = gen(batch);
  return hsic_value(images, concat_code(batch), cfg);
}

/// Fraction of generated samples whose nearest class centroid (Euclidean) is
/// their own class's. Ties go to the lowest class index.
template <ImageGenerator G>
double categorical_distinctness(G&& gen, const LatentSpec& spec, std::size_t per_class, Rng& rng) {
  if (per_class < 2) throw ContractError("categorical_distinctness needs at least two samples per class");
  const std::size_t k = spec.cat_classes;
  std::vector<Tensor> samples;
  for (std::size_t c = 0; c < k; ++c) {
    LatentBatch batch = sample_latents(spec, per_class, rng);
    for (std::size_t i = 0; i < per_class; ++i) batch.set_class(i, c);
    samples.push_back(gen(batch));
  }
  const std::size_t d = samples.front().cols();
  std::vector<std::vector<double>> centroids(k, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i)
      for (std::size_t j = 0; j < d; ++j) centroids[c][j] += samples[c].at(i, j);
    for (double& v : centroids[c]) v /= static_cast<double>(per_class);
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < k; ++q) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = samples[c].at(i, j) - centroids[q][j];
          s += diff * diff;
        }
        if (s < best_d) {
          best_d = s;
          best = q;
        }
      }
      if (best == c) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(k * per_class);
}

}  // namespace hsic_infogan
