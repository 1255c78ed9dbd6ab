#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "hsic_infogan/latent.hpp"

using namespace hsic_infogan;

namespace {

void expect_one_hot(const LatentBatch& b) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    double total = 0.0;
    std::size_t ones = 0, argmax = 0;
    for (std::size_t j = 0; j < b.c_cat.cols(); ++j) {
      const double v = b.c_cat.at(i, j);
      total += v;
      ones += v == 1.0;
      if (v > b.c_cat.at(i, argmax)) argmax = j;
      EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
    EXPECT_EQ(total, 1.0);
    EXPECT_EQ(ones, 1u);
    EXPECT_EQ(b.cat_labels[i], argmax);
  }
}

}  // namespace

TEST(LatentSpec, DefaultsAreSixtyTwoPlusTwelve) {
  const LatentSpec spec;
  EXPECT_EQ(spec.z_dim, 62u);
  EXPECT_EQ(spec.cat_classes, 10u);
  EXPECT_EQ(spec.cont_dim, 2u);
  EXPECT_EQ(spec.code_dim(), 12u);
  EXPECT_EQ(spec.input_dim(), 74u);
}

TEST(LatentSpec, ZeroDimensionRejected) {
  LatentSpec spec;
  spec.cont_dim = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(SampleLatents, DefaultShapesForBatchOfHundred) {
  Rng rng(1);
  const LatentBatch b = sample_latents(LatentSpec{}, 100, rng);
  EXPECT_EQ(b.z.shape(), (Shape{100, 62}));
  EXPECT_EQ(b.c_cat.shape(), (Shape{100, 10}));
  EXPECT_EQ(b.c_cont.shape(), (Shape{100, 2}));
  EXPECT_EQ(b.size(), 100u);
}

TEST(SampleLatents, RowsAreOneHot) {
  Rng rng(2);
  expect_one_hot(sample_latents(LatentSpec{}, 500, rng));
}

TEST(SampleLatents, ClassFrequenciesWithinBinomialBound) {
  Rng rng(3);
  const LatentBatch b = sample_latents(LatentSpec{}, 10000, rng);
  std::vector<int> counts(10, 0);
  for (auto l : b.cat_labels) ++counts[l];
  for (int c : counts) {
    EXPECT_GE(c, 900);
    EXPECT_LE(c, 1100);
  }
}

TEST(SampleLatents, SupportOfEachBlock) {
  Rng rng(4);
  const LatentBatch b = sample_latents(LatentSpec{}, 300, rng);
  for (double v : b.z.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  for (double v : b.c_cont.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(SampleLatents, SameSeedBitIdentical) {
  for (auto prior : {NoisePrior::uniform, NoisePrior::normal}) {
    LatentSpec spec;
    spec.z_prior = prior;
    Rng a(42), b(42);
    const LatentBatch x = sample_latents(spec, 37, a);
    const LatentBatch y = sample_latents(spec, 37, b);
    EXPECT_EQ(x.z, y.z);
    EXPECT_EQ(x.c_cat, y.c_cat);
    EXPECT_EQ(x.c_cont, y.c_cont);
    EXPECT_EQ(x.cat_labels, y.cat_labels);
  }
}

TEST(SampleLatents, DocumentedDrawOrder) {
  LatentSpec spec;
  spec.z_dim = 3;
  spec.cat_classes = 4;
  spec.cont_dim = 2;
  Rng rng(5), ref(5);
  const LatentBatch b = sample_latents(spec, 2, rng);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(b.z[i], ref.uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(b.cat_labels[i], ref.uniform_index(4));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(b.c_cont[i], ref.uniform01());
}

TEST(SampleLatents, NormalPriorHasRoughlyUnitMoments) {
  LatentSpec spec;
  spec.z_prior = NoisePrior::normal;
  Rng rng(6);
  const LatentBatch b = sample_latents(spec, 2000, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : b.z.data()) {
    mean += v;
    sq += v * v;
  }
  const double n = static_cast<double>(b.z.size());
  EXPECT_NEAR(mean / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.03);
}

TEST(LinearGrid, TenStepsOverMinusOneToOne) {
  const auto g = linear_grid(Range{}, 10);
  ASSERT_EQ(g.size(), 10u);
  EXPECT_EQ(g.front(), -1.0);
  EXPECT_EQ(g.back(), 1.0);
  for (std::size_t s = 0; s < 10; ++s) EXPECT_NEAR(g[s], -1.0 + 2.0 * s / 9.0, 1e-15);
  EXPECT_NEAR(g[1], -7.0 / 9.0, 1e-15);
  EXPECT_NEAR(g[8], 7.0 / 9.0, 1e-15);
}

TEST(TraversalBatch, TwoStepsAreExactlyTheEndpoints) {
  Rng rng(7);
  const LatentSpec spec;
  const LatentBatch fixed = sample_latents(spec, 1, rng);
  const LatentBatch t = traversal_batch(spec, TraverseContinuous{1}, 2, fixed, Range{-0.5, 2.5});
  EXPECT_EQ(t.c_cont.at(0, 1), -0.5);
  EXPECT_EQ(t.c_cont.at(1, 1), 2.5);
}

TEST(TraversalBatch, ContinuousKeepsOtherCoordinatesFixed) {
  Rng rng(8);
  const LatentSpec spec;
  const LatentBatch fixed = sample_latents(spec, 1, rng);
  const LatentBatch t = traversal_batch(spec, TraverseContinuous{0}, 10, fixed);
  ASSERT_EQ(t.size(), 10u);
  const auto grid = linear_grid(Range{}, 10);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t j = 0; j < spec.z_dim; ++j) EXPECT_EQ(t.z.at(r, j), fixed.z.at(0, j));
    EXPECT_EQ(t.cat_labels[r], fixed.cat_labels[0]);
    EXPECT_EQ(t.c_cont.at(r, 1), fixed.c_cont.at(0, 1));
    EXPECT_EQ(t.c_cont.at(r, 0), grid[r]);
    EXPECT_GE(t.c_cont.at(r, 0), -1.0);
    EXPECT_LE(t.c_cont.at(r, 0), 1.0);
  }
}

TEST(TraversalBatch, CategoricalGivesOneRowPerClass) {
  Rng rng(9);
  const LatentSpec spec;
  const LatentBatch fixed = sample_latents(spec, 1, rng);
  const LatentBatch t = traversal_batch(spec, TraverseCategorical{}, 10, fixed);
  ASSERT_EQ(t.size(), 10u);
  expect_one_hot(t);
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(t.cat_labels[r], r);
    EXPECT_EQ(t.c_cont.at(r, 0), fixed.c_cont.at(0, 0));
  }
}

TEST(TraversalBatch, Errors) {
  Rng rng(10);
  const LatentSpec spec;
  const LatentBatch fixed = sample_latents(spec, 1, rng);
  EXPECT_THROW(traversal_batch(spec, TraverseContinuous{2}, 10, fixed), IndexError);
  EXPECT_THROW(traversal_batch(spec, TraverseContinuous{0}, 1, fixed), ContractError);
}

TEST(ConcatCode, DefaultWidthIsTwelve) {
  Rng rng(11);
  EXPECT_EQ(concat_code(sample_latents(LatentSpec{}, 5, rng)).cols(), 12u);
}

TEST(ConcatCode, LayoutIsOneHotThenContinuous) {
  Rng rng(12);
  LatentBatch b = sample_latents(LatentSpec{}, 1, rng);
  b.set_class(0, 3);
  b.c_cont.at(0, 0) = 0.2;
  b.c_cont.at(0, 1) = 0.9;
  EXPECT_EQ(concat_code(b), Tensor::matrix({{0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0.2, 0.9}}));
}

TEST(ConcatCode, ColumnSlicesRecoverBlocks) {
  Rng rng(13);
  const LatentBatch b = sample_latents(LatentSpec{}, 20, rng);
  const Tensor c = concat_code(b);
  EXPECT_EQ(col_slice(c, 0, 10), b.c_cat);
  EXPECT_EQ(col_slice(c, 10, 12), b.c_cont);
}
