#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hsic_infogan/autodiff.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/latent.hpp"
#include "hsic_infogan/rng.hpp"

namespace hsic_infogan {

enum class Activation { none, tanh, leaky_relu };

struct MlpConfig {
  std::vector<std::size_t> widths;  // input, hidden..., output
  double leaky_alpha = 0.2;
  Activation output = Activation::none;

  void validate() const {
    if (widths.size() < 3) throw ConfigError("an MLP needs at least one hidden layer");
    for (auto w : widths)
      if (w == 0) throw ConfigError("MLP widths must be positive");
  }
};

/// Binds a parameter to the tape, either as a tracked leaf or as a constant.
inline Var bind(Tape& tape, Parameter& p, bool track) {
  return track ? tape.param(p) : tape.constant(p.value);
}

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // out

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : weight(name + ".weight", Tensor({in, out})), bias(name + ".bias", Tensor({out})) {}

  /// Glorot-uniform weights, zero bias.
  void init(Rng& rng) {
    const auto& s = weight.value.shape();
    const double a = std::sqrt(6.0 / static_cast<double>(s[0] + s[1]));
    for (double& w : weight.value.data()) w = rng.uniform(-a, a);
    bias.value.fill(0.0);
  }

  Var forward(Tape& tape, Var x, bool track) {
    return add(matmul(x, bind(tape, weight, track)), bind(tape, bias, track));
  }

  std::size_t in() const { return weight.value.shape()[0]; }
  std::size_t out() const { return weight.value.shape()[1]; }
};

inline Var activate(Var x, Activation act, double alpha) {
  switch (act) {
    case Activation::tanh: return tanh(x);
    case Activation::leaky_relu: return leaky_relu(x, alpha);
    case Activation::none: break;
  }
  return x;
}

class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, MlpConfig config) : config_(std::move(config)) {
    config_.validate();
    for (std::size_t i = 0; i + 1 < config_.widths.size(); ++i) {
      layers_.emplace_back(name + ".fc" + std::to_string(i), config_.widths[i],
                           config_.widths[i + 1]);
    }
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l.init(rng);
  }

  Var forward(Tape& tape, Var x, bool track) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i].forward(tape, x, track);
      const bool last = i + 1 == layers_.size();
      x = activate(x, last ? config_.output : Activation::leaky_relu, config_.leaky_alpha);
    }
    return x;
  }

  void collect(std::vector<Parameter*>& out) {
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }

  const MlpConfig& config() const { return config_; }
  std::size_t in() const { return config_.widths.front(); }
  std::size_t out() const { return config_.widths.back(); }

 private:
  MlpConfig config_;
  std::vector<Linear> layers_;
};

struct GeneratorConfig {
  LatentSpec latent;
  std::vector<std::size_t> hidden = {256, 512};
  std::size_t image_dim = 784;
};

/// G(z, c): an MLP from [z | c_cat | c_cont] to tanh-bounded images.
class Generator {
 public:
  Generator() = default;
  explicit Generator(GeneratorConfig config) : config_(std::move(config)) {
    config_.latent.validate();
    std::vector<std::size_t> widths{config_.latent.input_dim()};
    widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
    widths.push_back(config_.image_dim);
    net_ = Mlp("G", MlpConfig{widths, 0.2, Activation::tanh});
  }

  void init(Rng& rng) { net_.init(rng); }

  Var forward(Tape& tape, const LatentBatch& batch, bool track = true) {
    if (batch.z.cols() != config_.latent.z_dim ||
        batch.c_cat.cols() != config_.latent.cat_classes ||
        batch.c_cont.cols() != config_.latent.cont_dim) {
      throw DimensionError("latent batch does not match the generator's latent spec");
    }
    Var input = concat({tape.constant(batch.z), tape.constant(batch.c_cat),
                        tape.constant(batch.c_cont)});
    return net_.forward(tape, input, track);
  }

  /// Images as plain values, nothing recorded for backprop.
  Tensor generate(const LatentBatch& batch) {
    Tape tape;
    return forward(tape, batch, false).value();
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    net_.collect(out);
    return out;
  }

  const GeneratorConfig& config() const { return config_; }

 private:
  GeneratorConfig config_;
  Mlp net_;
};

struct DiscriminatorConfig {
  std::size_t image_dim = 784;
  std::vector<std::size_t> hidden = {512, 256};
  bool q_head = false;
  std::size_t cat_classes = 10;
  std::size_t cont_dim = 2;
};

struct QOutput {
  Var cat_logits;  // m x cat_classes
  Var cont_means;  // m x cont_dim
};

struct DiscriminatorOutput {
  Var logit;  // m x 1, pre-sigmoid
  std::optional<QOutput> q;
};

/// Shared leaky-ReLU trunk with an adversarial head and, for InfoGAN, a Q head.
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(DiscriminatorConfig config) : config_(std::move(config)) {
    if (config_.hidden.empty()) throw ConfigError("discriminator needs a hidden layer");
    std::vector<std::size_t> widths{config_.image_dim};
    widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
    // The trunk's last layer is hidden too, so it keeps the leaky activation.
    if (widths.size() == 2) widths.push_back(widths.back());
    trunk_ = Mlp("D.trunk", MlpConfig{widths, 0.2, Activation::leaky_relu});
    const std::size_t h = widths.back();
    adv_ = Linear("D.adv", h, 1);
    if (config_.q_head) {
      q_cat_ = Linear("D.q_cat", h, config_.cat_classes);
      q_cont_ = Linear("D.q_cont", h, config_.cont_dim);
    }
  }

  void init(Rng& rng) {
    trunk_.init(rng);
    adv_.init(rng);
    if (config_.q_head) {
      q_cat_.init(rng);
      q_cont_.init(rng);
    }
  }

  DiscriminatorOutput forward(Tape& tape, Var images, bool track = true) {
    if (images.value().rank() != 2 || images.value().cols() != config_.image_dim) {
      throw DimensionError("discriminator expects images of width " +
                           std::to_string(config_.image_dim) + ", got " +
                           shape_str(images.value().shape()));
    }
    Var h = trunk_.forward(tape, images, track);
    DiscriminatorOutput out{adv_.forward(tape, h, track), std::nullopt};
    if (config_.q_head) {
      out.q = QOutput{q_cat_.forward(tape, h, track), q_cont_.forward(tape, h, track)};
    }
    return out;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    trunk_.collect(out);
    out.push_back(&adv_.weight);
    out.push_back(&adv_.bias);
    if (config_.q_head) {
      out.push_back(&q_cat_.weight);
      out.push_back(&q_cat_.bias);
      out.push_back(&q_cont_.weight);
      out.push_back(&q_cont_.bias);
    }
    return out;
  }

  /// Trunk plus Q head: the weights the mutual-information term trains.
  std::vector<Parameter*> info_parameters() {
    std::vector<Parameter*> out;
    if (!config_.q_head) return out;
    trunk_.collect(out);
    out.push_back(&q_cat_.weight);
    out.push_back(&q_cat_.bias);
    out.push_back(&q_cont_.weight);
    out.push_back(&q_cont_.bias);
    return out;
  }

  /// Trunk plus adversarial head: the weights d_loss trains.
  std::vector<Parameter*> adversarial_parameters() {
    std::vector<Parameter*> out;
    trunk_.collect(out);
    out.push_back(&adv_.weight);
    out.push_back(&adv_.bias);
    return out;
  }

  bool has_q_head() const { return config_.q_head; }
  const DiscriminatorConfig& config() const { return config_; }

 private:
  DiscriminatorConfig config_;
  Mlp trunk_;
  Linear adv_;
  Linear q_cat_;
  Linear q_cont_;
};

inline std::size_t parameter_count(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

}  // namespace hsic_infogan
