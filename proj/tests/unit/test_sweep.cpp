#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "hsic_infogan/sweep.hpp"
#include "oracles.hpp"

using namespace hsic_infogan;

namespace {

SweepRow row(double sigma, double lambda, double ratio, double hsic = 0.0) {
  return SweepRow{1, sigma, lambda, ratio, hsic, 0.0};
}

SweepPlan tiny_plan() {
  SweepPlan plan;
  plan.sigmas = {0.5, 1.0, 2.0};
  plan.lambdas = {0.1, 1.0};
  plan.epochs = 1;
  plan.eval_samples = 12;
  plan.distinct_per_class = 2;
  plan.base.model = ModelKind::hsic_infogan;
  plan.base.latent.z_dim = 3;
  plan.base.latent.cat_classes = 3;
  plan.base.latent.cont_dim = 2;
  plan.base.g_hidden = {8};
  plan.base.d_hidden = {8};
  plan.base.batch = 10;
  plan.base.seed = 4;
  return plan;
}

Tensor tiny_images() {
  Rng rng(5);
  return oracle::random_matrix(40, 4, rng);
}

}  // namespace

TEST(SweepRow, RatioDistance) {
  EXPECT_EQ(row(1, 1, 1.0).ratio_distance(), 0.0);
  EXPECT_NEAR(row(1, 1, std::exp(1.0)).ratio_distance(), 1.0, 1e-15);
  EXPECT_NEAR(row(1, 1, std::exp(-1.0)).ratio_distance(), 1.0, 1e-15);
  EXPECT_TRUE(std::isinf(row(1, 1, std::nan("")).ratio_distance()));
  EXPECT_TRUE(std::isinf(row(1, 1, 0.0).ratio_distance()));
}

TEST(SelectBest, ClosestToOneInLogSpace) {
  // |ln 3| = 1.10 beats |ln 0.2| = 1.61 and |ln 8| = 2.08.
  EXPECT_EQ(select_best({row(2, 1, 0.2), row(3, 1, 3.0), row(4, 1, 8.0)}).sigma, 3.0);
}

TEST(SelectBest, TieBreaksOnHsicThenSigmaThenLambda) {
  EXPECT_EQ(select_best({row(2, 1, 2.0, 0.1), row(3, 1, 0.5, 0.3)}).sigma, 3.0);
  EXPECT_EQ(select_best({row(5, 1, 2.0, 0.1), row(3, 1, 2.0, 0.1)}).sigma, 3.0);
  EXPECT_EQ(select_best({row(3, 10, 2.0, 0.1), row(3, 0.3, 2.0, 0.1)}).lambda, 0.3);
  EXPECT_THROW(select_best({}), ContractError);
}

TEST(SelectBest, InBandWheneverAnyRowIs) {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<SweepRow> rows;
    const std::size_t n = 1 + rng.uniform_index(14);
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = rng.uniform01() < 0.1 ? std::nan("") : std::pow(10.0, rng.uniform(-3.0, 3.0));
      rows.push_back(row(2.0 + static_cast<double>(i), 1.0, ratio, rng.uniform01()));
    }
    bool any = false;
    double min_distance = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      any = any || (r.median_ratio >= 0.1 && r.median_ratio <= 10.0);
      min_distance = std::min(min_distance, r.ratio_distance());
    }
    const SweepRow best = select_best(rows);
    EXPECT_EQ(best.ratio_distance(), min_distance);
    if (any) {
      EXPECT_GE(best.median_ratio, 0.1);
      EXPECT_LE(best.median_ratio, 10.0);
    }
  }
}

TEST(SweepPlan, Validation) {
  SweepPlan plan = tiny_plan();
  plan.sigmas.clear();
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = tiny_plan();
  plan.sigmas = {2, -1};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = tiny_plan();
  plan.lambdas = {-0.5};
  EXPECT_THROW(plan.validate(), ConfigError);
}

TEST(RunSweep, RunsSigmaGridThenLambdaGrid) {
  const SweepPlan plan = tiny_plan();
  const SweepResult result = run_sweep(plan, tiny_images());
  EXPECT_EQ(result.runs, 5u);
  ASSERT_EQ(result.rows.size(), 5u);
  std::vector<SweepRow> phase1(result.rows.begin(), result.rows.begin() + 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(result.rows[i].phase, 1);
    EXPECT_EQ(result.rows[i].sigma, plan.sigmas[i]);
    EXPECT_EQ(result.rows[i].lambda, plan.phase1_lambda);
  }
  const double chosen = select_best(phase1).sigma;
  for (std::size_t i = 3; i < 5; ++i) {
    EXPECT_EQ(result.rows[i].phase, 2);
    EXPECT_EQ(result.rows[i].sigma, chosen);
    EXPECT_EQ(result.rows[i].lambda, plan.lambdas[i - 3]);
  }
  EXPECT_EQ(result.recommended.sigma, select_best(result.rows).sigma);
  EXPECT_EQ(result.recommended.lambda, select_best(result.rows).lambda);
}

TEST(RunSweep, ParallelMatchesSerial) {
  SweepPlan serial = tiny_plan(), parallel = tiny_plan();
  parallel.jobs = 3;
  const SweepResult a = run_sweep(serial, tiny_images());
  const SweepResult b = run_sweep(parallel, tiny_images());
  std::ostringstream sa, sb;
  write_sweep_csv(sa, a);
  write_sweep_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(SweepCsv, HeaderAndEmptyRatioCell) {
  SweepResult result;
  result.rows = {row(2, 1, std::nan(""), 0.5), row(3, 0.1, 1.5, 0.25)};
  std::ostringstream os;
  write_sweep_csv(os, result);
  EXPECT_EQ(os.str(), "sigma,lambda,median_ratio,final_hsic,distinctness\n2,1,,0.5,0\n3,0.10000000000000001,1.5,0.25,0\n");
}
