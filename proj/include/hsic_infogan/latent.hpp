#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/rng.hpp"
#include "hsic_infogan/tensor.hpp"

namespace hsic_infogan {

enum class NoisePrior { uniform, normal };

inline std::string to_string(NoisePrior p) { return p == NoisePrior::uniform ? "uniform" : "normal"; }

inline NoisePrior noise_prior_from_string(const std::string& s) {
  if (s == "uniform") return NoisePrior::uniform;
  if (s == "normal") return NoisePrior::normal;
  throw ConfigError("unknown noise prior '" + s + "'");
}

/// Noise z plus a one-hot categorical code and continuous codes.
struct LatentSpec {
  std::size_t z_dim = 62;
  std::size_t cat_classes = 10;
  std::size_t cont_dim = 2;
  NoisePrior z_prior = NoisePrior::uniform;  // U(-1, 1) or N(0, 1)
  // Continuous codes are always U(0, 1) during sampling.

  std::size_t code_dim() const { return cat_classes + cont_dim; }
  std::size_t input_dim() const { return z_dim + code_dim(); }

  void validate() const {
    if (z_dim == 0 || cat_classes == 0 || cont_dim == 0) {
      throw ConfigError("latent dimensions must be positive");
    }
  }
};

struct LatentBatch {
  Tensor z;       // m x z_dim
  Tensor c_cat;   // m x cat_classes, one-hot
  Tensor c_cont;  // m x cont_dim
  std::vector<std::size_t> cat_labels;

  std::size_t size() const { return cat_labels.size(); }

  /// Overwrites row `i`'s categorical code.
  void set_class(std::size_t i, std::size_t label) {
    for (std::size_t j = 0; j < c_cat.cols(); ++j) c_cat.at(i, j) = 0.0;
    c_cat.at(i, label) = 1.0;
    cat_labels[i] = label;
  }

  LatentBatch row(std::size_t i) const {
    return {row_slice(z, i, i + 1), row_slice(c_cat, i, i + 1), row_slice(c_cont, i, i + 1),
            {cat_labels[i]}};
  }
};

/// Draw order: z row-major, then the m categorical labels, then c_cont
/// row-major.
inline LatentBatch sample_latents(const LatentSpec& spec, std::size_t m, Rng& rng) {
  spec.validate();
  if (m == 0) throw ContractError("sample_latents: batch size must be positive");
  LatentBatch b{Tensor({m, spec.z_dim}), Tensor({m, spec.cat_classes}),
                Tensor({m, spec.cont_dim}), std::vector<std::size_t>(m)};
  for (double& v : b.z.data())
    v = spec.z_prior == NoisePrior::uniform ? rng.uniform(-1.0, 1.0) : rng.normal();
  for (std::size_t i = 0; i < m; ++i) b.set_class(i, rng.uniform_index(spec.cat_classes));
  for (double& v : b.c_cont.data()) v = rng.uniform01();
  return b;
}

struct TraverseCategorical {};
struct TraverseContinuous {
  std::size_t index = 0;
};
using TraversalCode = std::variant<TraverseCategorical, TraverseContinuous>;

struct Range {
  double lo = -1.0;
  double hi = 1.0;
};

/// Inclusive linear grid of `steps` points over [lo, hi].
inline std::vector<double> linear_grid(Range r, std::size_t steps) {
  std::vector<double> g(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    if (s == 0) {
      g[s] = r.lo;
    } else if (s + 1 == steps) {
      g[s] = r.hi;
    } else {
      g[s] = r.lo + (r.hi - r.lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
    }
  }
  return g;
}

/// Copies of `fixed` (row 0) varying one code. Continuous traversal yields
/// `steps` rows over `range`; categorical traversal yields one row per class.
inline LatentBatch traversal_batch(const LatentSpec& spec, TraversalCode code, std::size_t steps,
                                   const LatentBatch& fixed, Range range = {}) {
  if (steps < 2) throw ContractError("traversal needs at least two steps");
  const bool categorical = std::holds_alternative<TraverseCategorical>(code);
  if (!categorical && std::get<TraverseContinuous>(code).index >= spec.cont_dim) {
    throw IndexError("continuous code index " +
                     std::to_string(std::get<TraverseContinuous>(code).index) +
                     " out of range (cont_dim " + std::to_string(spec.cont_dim) + ")");
  }
  const std::size_t n = categorical ? spec.cat_classes : steps;
  LatentBatch out{Tensor({n, spec.z_dim}), Tensor({n, spec.cat_classes}),
                  Tensor({n, spec.cont_dim}), std::vector<std::size_t>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < spec.z_dim; ++j) out.z.at(r, j) = fixed.z.at(0, j);
    for (std::size_t j = 0; j < spec.cont_dim; ++j) out.c_cont.at(r, j) = fixed.c_cont.at(0, j);
    out.set_class(r, fixed.cat_labels[0]);
  }
  if (categorical) {
    for (std::size_t r = 0; r < n; ++r) out.set_class(r, r);
  } else {
    const std::size_t j = std::get<TraverseContinuous>(code).index;
    const auto grid = linear_grid(range, steps);
    for (std::size_t r = 0; r < n; ++r) out.c_cont.at(r, j) = grid[r];
  }
  return out;
}

/// One-hot block followed by the continuous block: the code matrix c.
inline Tensor concat_code(const LatentBatch& b) {
  const std::size_t m = b.size();
  const std::size_t k = b.c_cat.cols();
  const std::size_t d = b.c_cont.cols();
  Tensor out({m, k + d});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) = b.c_cat.at(i, j);
    for (std::size_t j = 0; j < d; ++j) out.at(i, k + j) = b.c_cont.at(i, j);
  }
  return out;
}

}  // namespace hsic_infogan
