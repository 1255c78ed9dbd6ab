#pragma once

// Biased empirical HSIC with Gaussian kernels:
//
//   HSIC(X, Z) = (m - 1)^-2 trace(K_X H K_Z H),   H = I - (1/m) 1 1^T
//   k(a, b)    = exp(-||a - b||^2 / (2 sigma^2))
//
// Since H K H is symmetric, the trace equals sum_ij (H K_X H)_ij (H K_Z H)_ij,
// which is what both the plain and the differentiable paths evaluate. H is
// never materialised; centering is done by subtracting row and column means.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hsic_infogan/autodiff.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/tensor.hpp"

namespace hsic_infogan {

struct GramMatrix {
  Tensor values;  // m x m
  double sigma = 1.0;
};

/// Image-side and code-side kernel bandwidths.
struct HsicConfig {
  double sigma_x = 1.0;
  double sigma_c = 1.0;

  static HsicConfig shared(double sigma) { return {sigma, sigma}; }

  void validate() const {
    if (!(sigma_x > 0.0) || !(sigma_c > 0.0)) {
      throw ConfigError("HSIC bandwidths must be strictly positive");
    }
  }
};

/// Squared Euclidean distances between rows, via |a|^2 + |b|^2 - 2 a.b.
/// Negative round-off is clamped to zero; the diagonal is exactly zero and
/// the result is exactly symmetric.
inline Tensor pairwise_sq_dists(const Tensor& x) {
  x.require_rank(2);
  const std::size_t m = x.rows();
  const Tensor gram = gemm_nt(x, x);
  Tensor d({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = std::max(0.0, gram.at(i, i) + gram.at(j, j) - 2.0 * gram.at(i, j));
      d.at(i, j) = v;
      d.at(j, i) = v;
    }
  }
  return d;
}

inline double gaussian_coefficient(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("Gaussian kernel bandwidth must be positive");
  return -1.0 / (2.0 * sigma * sigma);
}

inline GramMatrix gaussian_gram(const Tensor& sq_dists, double sigma) {
  const double k = gaussian_coefficient(sigma);
  Tensor values(sq_dists.shape());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::exp(k * sq_dists[i]);
  return {std::move(values), sigma};
}

/// H K H by double centering.
inline Tensor center_gram(const Tensor& k) {
  k.require_rank(2);
  const std::size_t m = k.rows();
  const double md = static_cast<double>(m);
  std::vector<double> row_mean(m, 0.0), col_mean(m, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row_mean[i] += k.at(i, j);
      col_mean[j] += k.at(i, j);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    grand += row_mean[i];
    row_mean[i] /= md;
    col_mean[i] /= md;
  }
  grand /= md * md;
  Tensor out({m, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out.at(i, j) = k.at(i, j) - row_mean[i] - col_mean[j] + grand;
  return out;
}

inline Tensor center_gram(const GramMatrix& k) { return center_gram(k.values); }

namespace detail {

inline void check_hsic_inputs(const Tensor& x, const Tensor& z) {
  x.require_rank(2);
  z.require_rank(2);
  if (x.rows() != z.rows()) {
    throw DimensionError("HSIC inputs disagree on sample count: " + shape_str(x.shape()) +
                         " vs " + shape_str(z.shape()));
  }
  if (x.rows() < 2) throw ContractError("HSIC needs at least two samples");
}

inline double hsic_normaliser(std::size_t m) {
  const double d = static_cast<double>(m) - 1.0;
  return 1.0 / (d * d);
}

}  // namespace detail

/// Plain-number HSIC; same arithmetic as the differentiable path.
inline double hsic_value(const Tensor& x, const Tensor& z, const HsicConfig& cfg) {
  cfg.validate();
  detail::check_hsic_inputs(x, z);
  const Tensor kx = center_gram(gaussian_gram(pairwise_sq_dists(x), cfg.sigma_x));
  const Tensor kz = center_gram(gaussian_gram(pairwise_sq_dists(z), cfg.sigma_c));
  double s = 0.0;
  for (std::size_t i = 0; i < kx.size(); ++i) s += kx[i] * kz[i];
  return detail::hsic_normaliser(x.rows()) * s;
}

// ---------------------------------------------------------------------------
// Differentiable building blocks

inline Var pairwise_sq_dists(Var x) {
  Tensor d = pairwise_sq_dists(x.value());
  return x.tape->push(std::move(d), {x.id}, [](BackwardContext& c) {
    const Tensor& xv = c.input(0);
    const Tensor& d = c.output();
    const std::size_t m = d.rows();
    // Clamped and diagonal entries carry no gradient.
    Tensor s({m, m});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (d.at(i, j) > 0.0) s.at(i, j) = c.grad().at(i, j) + c.grad().at(j, i);
    // dX = 2 (diag(rowsum S) X - S X) with S already symmetrised.
    Tensor gx = gemm(s, xv);
    for (std::size_t i = 0; i < m; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) r += s.at(i, j);
      for (std::size_t k = 0; k < xv.cols(); ++k)
        gx.at(i, k) = 2.0 * (r * xv.at(i, k) - gx.at(i, k));
    }
    c.accumulate(0, std::move(gx));
  });
}

inline Var gaussian_gram(Var sq_dists, double sigma) {
  return exp(scale(sq_dists, gaussian_coefficient(sigma)));
}

/// Differentiable H K H. Centering is self-adjoint, so the backward rule
/// double-centers the upstream gradient.
inline Var center_gram(Var k) {
  Tensor out = center_gram(k.value());
  return k.tape->push(std::move(out), {k.id},
                      [](BackwardContext& c) { c.accumulate(0, center_gram(c.grad())); });
}

/// Differentiable biased HSIC between the rows of `x` and `z`.
inline Var hsic_biased(Var x, Var z, const HsicConfig& cfg) {
  cfg.validate();
  detail::check_hsic_inputs(x.value(), z.value());
  Var kx = center_gram(gaussian_gram(pairwise_sq_dists(x), cfg.sigma_x));
  Var kz = center_gram(gaussian_gram(pairwise_sq_dists(z), cfg.sigma_c));
  return scale(sum(mul(kx, kz)), detail::hsic_normaliser(x.value().rows()));
}

/// sigma = sqrt(median(positive pairwise squared distances) / 2), so the
/// median-distance pair has kernel value exp(-1/2).
inline double median_heuristic(const Tensor& x) {
  x.require_rank(2);
  const std::size_t m = x.rows();
  std::vector<double> d2;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x.at(i, k) - x.at(j, k);
        s += diff * diff;
      }
      if (s > 0.0) d2.push_back(s);
    }
  }
  if (d2.empty()) throw DegenerateInputError("median heuristic: all rows are identical");
  std::sort(d2.begin(), d2.end());
  const std::size_t n = d2.size();
  const double med = n % 2 ? d2[n / 2] : 0.5 * (d2[n / 2 - 1] + d2[n / 2]);
  return std::sqrt(med / 2.0);
}

}  // namespace hsic_infogan
