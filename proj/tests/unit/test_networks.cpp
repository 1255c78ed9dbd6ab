#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hsic_infogan/networks.hpp"
#include "oracles.hpp"

using namespace hsic_infogan;

namespace {

void zero_all(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->value.fill(0.0);
}

GeneratorConfig tiny_generator() {
  GeneratorConfig c;
  c.latent.z_dim = 3;
  c.latent.cat_classes = 4;
  c.latent.cont_dim = 2;
  c.hidden = {6};
  c.image_dim = 5;
  return c;
}

}  // namespace

TEST(InitParams, BiasesZeroWeightsWithinGlorotBound) {
  Generator g(GeneratorConfig{});
  Rng rng(1);
  g.init(rng);
  for (Parameter* p : g.parameters()) {
    if (p->value.rank() == 1) {
      for (double v : p->value.data()) EXPECT_EQ(v, 0.0) << p->name;
    } else {
      const double a = std::sqrt(6.0 / static_cast<double>(p->value.rows() + p->value.cols()));
      for (double v : p->value.data()) EXPECT_LE(std::abs(v), a) << p->name;
    }
  }
}

TEST(InitParams, SameSeedBitIdentical) {
  Discriminator a(DiscriminatorConfig{.q_head = true});
  Discriminator b(DiscriminatorConfig{.q_head = true});
  Rng ra(5), rb(5);
  a.init(ra);
  b.init(rb);
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(InitParams, NamesUniqueWithinModel) {
  Generator g(GeneratorConfig{});
  Discriminator d(DiscriminatorConfig{.q_head = true});
  std::set<std::string> names;
  std::size_t n = 0;
  for (Parameter* p : g.parameters()) names.insert(p->name), ++n;
  for (Parameter* p : d.parameters()) names.insert(p->name), ++n;
  EXPECT_EQ(names.size(), n);
}

TEST(InitParams, GradShapesMatchValues) {
  Discriminator d(DiscriminatorConfig{.q_head = true});
  for (Parameter* p : d.parameters()) EXPECT_EQ(p->grad.shape(), p->value.shape());
}

TEST(ParameterCount, DefaultConfigsMatchHandCount) {
  Generator g(GeneratorConfig{});
  // 74*256+256 + 256*512+512 + 512*784+784
  EXPECT_EQ(parameter_count(g.parameters()), 552976u);
  Discriminator d(DiscriminatorConfig{});
  // 784*512+512 + 512*256+256 + 256+1
  EXPECT_EQ(parameter_count(d.parameters()), 533505u);
  Discriminator dq(DiscriminatorConfig{.q_head = true});
  // plus 256*10+10 + 256*2+2
  EXPECT_EQ(parameter_count(dq.parameters()), 536589u);
}

TEST(GeneratorForward, MnistBatchShapeAndRange) {
  Generator g(GeneratorConfig{});
  Rng rng(2);
  g.init(rng);
  const Tensor out = g.generate(sample_latents(LatentSpec{}, 100, rng));
  EXPECT_EQ(out.shape(), (Shape{100, 784}));
  for (double v : out.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(GeneratorForward, ZeroWeightsGiveZeroImages) {
  Generator g(GeneratorConfig{});
  zero_all(g.parameters());
  Rng rng(3);
  const Tensor out = g.generate(sample_latents(LatentSpec{}, 4, rng));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(GeneratorForward, GradientReachesFirstLayer) {
  Generator g(tiny_generator());
  Rng rng(4);
  g.init(rng);
  const LatentBatch batch = sample_latents(g.config().latent, 3, rng);
  Parameter* w0 = g.parameters().front();
  ASSERT_EQ(w0->name, "G.fc0.weight");
  Tape tape;
  tape.backward(mean(g.forward(tape, batch)));
  double norm = 0.0;
  for (double v : w0->grad.data()) norm += std::abs(v);
  EXPECT_GT(norm, 0.0);

  // Spot check one coordinate against a central difference.
  const Tensor analytic = w0->grad;
  const double h = 1e-5;
  const double orig = w0->value[7];
  auto eval = [&] {
    Tape t;
    return mean(g.forward(t, batch, false)).value().item();
  };
  w0->value[7] = orig + h;
  const double up = eval();
  w0->value[7] = orig - h;
  const double down = eval();
  w0->value[7] = orig;
  EXPECT_NEAR(analytic[7], (up - down) / (2 * h), 1e-8);
}

TEST(GeneratorForward, LatentMismatchIsDimensionError) {
  Generator g(tiny_generator());
  Rng rng(5);
  EXPECT_THROW(g.generate(sample_latents(LatentSpec{}, 2, rng)), DimensionError);
}

TEST(GeneratorForward, Deterministic) {
  Generator g(GeneratorConfig{});
  Rng rng(6);
  g.init(rng);
  const LatentBatch b = sample_latents(LatentSpec{}, 8, rng);
  EXPECT_EQ(g.generate(b), g.generate(b));
}

TEST(DiscriminatorForward, ZeroInitGivesHalfProbability) {
  Discriminator d(DiscriminatorConfig{});
  zero_all(d.parameters());
  Rng rng(7);
  Tape tape;
  auto out = d.forward(tape, tape.constant(oracle::random_matrix(5, 784, rng)));
  for (double v : out.logit.value().data()) {
    EXPECT_EQ(v, 0.0);
    EXPECT_EQ(stable_sigmoid(v), 0.5);
  }
}

TEST(DiscriminatorForward, QHeadOnlyWhenConfigured) {
  Rng rng(8);
  const Tensor images = oracle::random_matrix(6, 784, rng);
  Discriminator plain(DiscriminatorConfig{});
  plain.init(rng);
  Tape t1;
  auto o1 = plain.forward(t1, t1.constant(images));
  EXPECT_FALSE(o1.q.has_value());
  EXPECT_EQ(o1.logit.shape(), (Shape{6, 1}));

  Discriminator info(DiscriminatorConfig{.q_head = true});
  info.init(rng);
  Tape t2;
  auto o2 = info.forward(t2, t2.constant(images));
  ASSERT_TRUE(o2.q.has_value());
  EXPECT_EQ(o2.logit.shape(), (Shape{6, 1}));
  EXPECT_EQ(o2.q->cat_logits.shape(), (Shape{6, 10}));
  EXPECT_EQ(o2.q->cont_means.shape(), (Shape{6, 2}));
}

TEST(DiscriminatorForward, WidthMismatchIsDimensionError) {
  Discriminator d(DiscriminatorConfig{});
  Tape tape;
  EXPECT_THROW(d.forward(tape, tape.constant(Tensor({2, 100}))), DimensionError);
}

TEST(DiscriminatorForward, FiniteForFiniteInputs) {
  Discriminator d(DiscriminatorConfig{.q_head = true});
  Rng rng(9);
  d.init(rng);
  Tape tape;
  auto out = d.forward(tape, tape.constant(oracle::random_matrix(10, 784, rng, -1, 1)));
  EXPECT_TRUE(out.logit.value().all_finite());
  EXPECT_TRUE(out.q->cat_logits.value().all_finite());
}

TEST(DiscriminatorParameters, GroupsShareTheTrunk) {
  Discriminator d(DiscriminatorConfig{.q_head = true});
  const auto adv = d.adversarial_parameters();
  const auto info = d.info_parameters();
  EXPECT_EQ(adv.back()->name, "D.adv.bias");
  EXPECT_EQ(info.back()->name, "D.q_cont.bias");
  EXPECT_EQ(adv.front(), info.front());
  Discriminator plain(DiscriminatorConfig{});
  EXPECT_TRUE(plain.info_parameters().empty());
}

TEST(MlpConfig, NeedsHiddenLayer) {
  EXPECT_THROW((MlpConfig{{4, 2}, 0.2, Activation::none}.validate()), ConfigError);
  EXPECT_THROW((MlpConfig{{4, 0, 2}, 0.2, Activation::none}.validate()), ConfigError);
}
