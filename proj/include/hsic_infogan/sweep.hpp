#pragma once

// Two-phase bandwidth/weight search for HSIC-InfoGAN: short runs over a
// sigma grid at a fixed lambda, then over a lambda grid at the chosen sigma.
//
// A setting is ranked by how close the median magnitude ratio
// |g_adv| / (lambda * HSIC) is to 1 (distance |ln ratio|), then by higher
// final held-out HSIC, then by smaller sigma, then by smaller lambda. The
// phase-1 winner stays a candidate in phase 2.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>
#include <tuple>
#include <vector>

#include "hsic_infogan/evaluation.hpp"
#include "hsic_infogan/training.hpp"

namespace hsic_infogan {

struct SweepPlan {
  std::vector<double> sigmas = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> lambdas = {0.1, 0.3, 1, 3, 10};
  double phase1_lambda = 1.0;
  std::size_t epochs = 3;
  std::size_t jobs = 1;
  std::size_t eval_samples = 100;
  std::size_t distinct_per_class = 20;
  TrainConfig base;

  void validate() const {
    if (sigmas.empty() || lambdas.empty()) throw ConfigError("sweep grids must be non-empty");
    for (double s : sigmas)
      if (!(s > 0.0)) throw ConfigError("sweep sigma values must be positive");
    for (double l : lambdas)
      if (!(l > 0.0)) throw ConfigError("sweep lambda values must be positive");
    if (!(phase1_lambda > 0.0)) throw ConfigError("phase-1 lambda must be positive");
    if (base.model != ModelKind::hsic_infogan) throw ConfigError("sweeps apply to hsic-infogan only");
    if (jobs == 0) throw ConfigError("sweep needs at least one job");
  }
};

struct SweepRow {
  int phase = 1;
  double sigma = 0.0;
  double lambda = 0.0;
  double median_ratio = std::numeric_limits<double>::quiet_NaN();
  double final_hsic = 0.0;
  double distinctness = 0.0;

  double ratio_distance() const {
    if (!(median_ratio > 0.0) || !std::isfinite(median_ratio)) {
      return std::numeric_limits<double>::infinity();
    }
    return std::abs(std::log(median_ratio));
  }

  bool ratio_in_band() const { return median_ratio >= 0.1 && median_ratio <= 10.0; }
};

/// Strict weak order: true when `a` is the better setting.
inline bool better_setting(const SweepRow& a, const SweepRow& b) {
  return std::make_tuple(a.ratio_distance(), -a.final_hsic, a.sigma, a.lambda) <
         std::make_tuple(b.ratio_distance(), -b.final_hsic, b.sigma, b.lambda);
}

/// The best row under better_setting. Rows must be non-empty.
inline SweepRow select_best(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ContractError("select_best: no rows");
  SweepRow best = rows.front();
  for (const auto& r : rows)
    if (better_setting(r, best)) best = r;
  return best;
}

struct SweepResult {
  std::vector<SweepRow> rows;  // phase-1 rows then phase-2 rows
  SweepRow recommended;
  std::size_t runs = 0;
};

/// One short training run scored for the sweep.
inline SweepRow sweep_trial(const SweepPlan& plan, const Tensor& images, double sigma,
                            double lambda, int phase) {
  TrainConfig cfg = plan.base;
  cfg.sigma_x = sigma;
  if (!plan.base.sigma_c) cfg.sigma_c.reset();
  cfg.lambda = lambda;
  cfg.epochs = plan.epochs;
  Trainer trainer(cfg, images.cols());
  const auto history = trainer.train(images);
  SweepRow row{phase, sigma, lambda, median_magnitude_ratio(history), 0.0, 0.0};
  auto gen = as_image_generator(trainer.generator());
  Rng eval_rng(cfg.seed ^ 0x5eed5eed5eedULL);
  row.final_hsic = eval_hsic(gen, cfg.latent, plan.eval_samples, cfg.hsic(), eval_rng);
  row.distinctness = categorical_distinctness(gen, cfg.latent, plan.distinct_per_class, eval_rng);
  return row;
}

/// Runs `tasks` on up to `jobs` threads; results keep task order.
template <typename T>
std::vector<T> run_parallel(const std::vector<std::function<T()>>& tasks, std::size_t jobs) {
  std::vector<T> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(jobs, tasks.size());
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

inline SweepResult run_sweep(const SweepPlan& plan, const Tensor& images) {
  plan.validate();
  SweepResult result;

  std::vector<std::function<SweepRow()>> phase1;
  for (double s : plan.sigmas)
    phase1.push_back([&plan, &images, s] { return sweep_trial(plan, images, s, plan.phase1_lambda, 1); });
  const auto rows1 = run_parallel(phase1, plan.jobs);
  const SweepRow best1 = select_best(rows1);

  std::vector<std::function<SweepRow()>> phase2;
  for (double l : plan.lambdas)
    phase2.push_back([&plan, &images, &best1, l] { return sweep_trial(plan, images, best1.sigma, l, 2); });
  const auto rows2 = run_parallel(phase2, plan.jobs);

  result.rows = rows1;
  result.rows.insert(result.rows.end(), rows2.begin(), rows2.end());
  result.recommended = select_best(result.rows);
  result.runs = rows1.size() + rows2.size();
  return result;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "sigma,lambda,median_ratio,final_hsic,distinctness\n";
  const auto prec = os.precision();
  os.precision(17);
  for (const auto& r : result.rows) {
    os << r.sigma << ',' << r.lambda << ',';
    if (std::isfinite(r.median_ratio)) os << r.median_ratio;
    os << ',' << r.final_hsic << ',' << r.distinctness << '\n';
  }
  os.precision(prec);
}

}  // namespace hsic_infogan
