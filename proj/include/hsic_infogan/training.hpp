#pragma once

// GAN, InfoGAN and HSIC-InfoGAN objectives and the alternating training loop.
//
// Each iteration takes one Adam step on the discriminator (with generated
// images detached from the generator) followed by one Adam step on the
// generator, whose loss is
//
//   gan           g_adv
//   infogan       g_adv + lambda_info * aux        (aux also trains Q + trunk)
//   hsic-infogan  g_adv - lambda * HSIC(G(z, c), c)
//
// All randomness flows from a single seeded Rng in a fixed order: parameter
// initialisation (G then D), then per epoch a Fisher-Yates shuffle, then per
// step the D-phase latents followed by the G-phase latents.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hsic_infogan/adam.hpp"
#include "hsic_infogan/autodiff.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/kernel_hsic.hpp"
#include "hsic_infogan/latent.hpp"
#include "hsic_infogan/networks.hpp"
#include "hsic_infogan/rng.hpp"

namespace hsic_infogan {

enum class ModelKind { gan, infogan, hsic_infogan };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gan: return "gan";
    case ModelKind::infogan: return "infogan";
    case ModelKind::hsic_infogan: return "hsic-infogan";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gan") return ModelKind::gan;
  if (s == "infogan") return ModelKind::infogan;
  if (s == "hsic-infogan") return ModelKind::hsic_infogan;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct TrainConfig {
  ModelKind model = ModelKind::hsic_infogan;
  double lambda = 1.0;       // HSIC weight
  double lambda_info = 1.0;  // InfoGAN L_I weight
  double sigma_x = 5.0;
  std::optional<double> sigma_c;  // defaults to sigma_x
  double lr_d = 2e-4;
  double lr_g = 1e-3;
  std::size_t batch = 100;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::string dataset = "mnist";
  // Literal min log(1 - D(G)) generator loss instead of -log D(G).
  bool saturating_g_loss = false;
  // HSIC(x, c_cat) + HSIC(x, c_cont) instead of HSIC(x, [c_cat | c_cont]).
  bool split_code_hsic = false;
  LatentSpec latent;
  std::vector<std::size_t> g_hidden = {256, 512};
  std::vector<std::size_t> d_hidden = {512, 256};

  HsicConfig hsic() const { return {sigma_x, sigma_c.value_or(sigma_x)}; }

  void validate() const {
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (lambda_info < 0.0) throw ConfigError("lambda_info must be non-negative");
    if (!(lr_d > 0.0) || !(lr_g > 0.0)) throw ConfigError("learning rates must be positive");
    if (batch < 2) throw ConfigError("batch size must be at least 2");
    hsic().validate();
    latent.validate();
  }
};

struct LossReport {
  std::size_t step = 0;  // 1-based
  std::size_t epoch = 0;
  double d_loss = 0.0;
  double g_adv_loss = 0.0;
  std::optional<double> hsic_value;
  std::optional<double> aux_loss;
  std::optional<double> magnitude_ratio;

  bool all_finite() const {
    auto ok = [](const std::optional<double>& v) { return !v || std::isfinite(*v); };
    return std::isfinite(d_loss) && std::isfinite(g_adv_loss) && ok(hsic_value) &&
           ok(aux_loss) && ok(magnitude_ratio);
  }
};

// ---------------------------------------------------------------------------
// Objectives

/// -mean log D(real) - mean log(1 - D(fake)), from raw logits.
inline Var d_loss_from_logits(Var real_logit, Var fake_logit) {
  return add(mean(softplus(negate(real_logit))), mean(softplus(fake_logit)));
}

inline Var d_loss(Discriminator& d, Tape& tape, Var real, Var fake) {
  return d_loss_from_logits(d.forward(tape, real).logit, d.forward(tape, fake).logit);
}

/// Non-saturating -mean log D(fake), or mean log(1 - D(fake)) when `saturating`.
inline Var g_loss_adv_from_logits(Var fake_logit, bool saturating = false) {
  if (saturating) return negate(mean(softplus(fake_logit)));
  return mean(softplus(negate(fake_logit)));
}

inline Var g_loss_adv(Discriminator& d, Tape& tape, Var fake, bool saturating = false) {
  return g_loss_adv_from_logits(d.forward(tape, fake).logit, saturating);
}

/// Negative of the L_I surrogate: cross-entropy on the categorical code plus
/// mean squared error on the continuous code (unit-variance Gaussian).
inline Var infogan_aux_loss(const std::optional<QOutput>& q, const LatentBatch& batch) {
  if (!q) throw ContractError("infogan_aux_loss requires a discriminator with a Q head");
  Tape& tape = *q->cat_logits.tape;
  Var ce = softmax_cross_entropy(q->cat_logits, batch.c_cat);
  Var mse = mean(square(sub(q->cont_means, tape.constant(batch.c_cont))));
  return add(ce, mse);
}

/// HSIC between generated images and their codes.
inline Var hsic_penalty(Var fake, const LatentBatch& batch, const HsicConfig& cfg,
                        bool split_code = false) {
  Tape& tape = *fake.tape;
  if (!split_code) return hsic_biased(fake, tape.constant(concat_code(batch)), cfg);
  return add(hsic_biased(fake, tape.constant(batch.c_cat), cfg),
             hsic_biased(fake, tape.constant(batch.c_cont), cfg));
}

// ---------------------------------------------------------------------------
// Trainer

using EpochCallback = std::function<void(std::size_t epoch, const std::vector<LossReport>&)>;

class Trainer {
 public:
  Trainer(TrainConfig config, std::size_t image_dim)
      : config_(std::move(config)),
        rng_(config_.seed),
        generator_(GeneratorConfig{config_.latent, config_.g_hidden, image_dim}),
        discriminator_(DiscriminatorConfig{image_dim, config_.d_hidden,
                                           config_.model == ModelKind::infogan,
                                           config_.latent.cat_classes, config_.latent.cont_dim}) {
    config_.validate();
    generator_.init(rng_);
    discriminator_.init(rng_);
  }

  /// One D update then one G update on a batch of real images.
  LossReport train_step(const Tensor& real) {
    if (real.rank() != 2 || real.cols() != discriminator_.config().image_dim || real.rows() == 0) {
      throw DimensionError("train_step: real batch has shape " + shape_str(real.shape()));
    }
    LossReport report;
    report.step = ++step_;
    const std::size_t m = config_.batch;
    const bool info = config_.model == ModelKind::infogan;

    {
      const LatentBatch latents = sample_latents(config_.latent, m, rng_);
      const Tensor fake = generator_.generate(latents);
      Tape tape;
      Var loss = d_loss(discriminator_, tape, tape.constant(real), tape.constant(fake));
      report.d_loss = loss.value().item();
      tape.backward(loss);
      auto params = discriminator_.adversarial_parameters();
      adam_step(params, adam_d_, config_.lr_d);
    }

    {
      const LatentBatch latents = sample_latents(config_.latent, m, rng_);
      Tape tape;
      Var fake = generator_.forward(tape, latents, true);
      DiscriminatorOutput out = discriminator_.forward(tape, fake, info);
      Var adv = g_loss_adv_from_logits(out.logit, config_.saturating_g_loss);
      report.g_adv_loss = adv.value().item();
      Var total = adv;
      std::optional<Var> weighted_aux;
      if (config_.model == ModelKind::hsic_infogan) {
        Var h = hsic_penalty(fake, latents, config_.hsic(), config_.split_code_hsic);
        report.hsic_value = h.value().item();
        total = sub(total, scale(h, config_.lambda));
        const double weighted = config_.lambda * *report.hsic_value;
        if (weighted > 0.0) report.magnitude_ratio = std::abs(report.g_adv_loss) / weighted;
      } else if (info) {
        Var aux = infogan_aux_loss(out.q, latents);
        report.aux_loss = aux.value().item();
        weighted_aux = scale(aux, config_.lambda_info);
        total = add(total, *weighted_aux);
      }
      if (!report.all_finite()) throw NonFiniteError("non-finite loss: " + describe(report));

      auto g_params = generator_.parameters();
      tape.backward(total, member_of(g_params));
      if (info) {
        auto q_params = discriminator_.info_parameters();
        tape.backward(*weighted_aux, member_of(q_params));
        adam_step(q_params, adam_info_, config_.lr_d);
      }
      adam_step(g_params, adam_g_, config_.lr_g);
    }
    return report;
  }

  /// Runs `epochs` passes over the rows of `images`, shuffled each epoch.
  std::vector<LossReport> train(const Tensor& images, const EpochCallback& on_epoch = {}) {
    if (images.rank() != 2 || images.rows() == 0) throw ContractError("train: empty dataset");
    const std::size_t n = images.rows();
    const std::size_t m = config_.batch;
    std::vector<LossReport> history;
    std::vector<std::size_t> order(n);
    for (std::size_t e = 0; e < config_.epochs; ++e) {
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng_.uniform_index(i + 1)]);
      for (std::size_t start = 0; start < n; start += m) {
        const std::size_t end = std::min(n, start + m);
        const std::span<const std::size_t> idx(order.data() + start, end - start);
        LossReport r = train_step(gather_rows(images, idx));
        r.epoch = e;
        history.push_back(r);
      }
      if (on_epoch) on_epoch(e, history);
    }
    return history;
  }

  Generator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const TrainConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  std::size_t steps() const { return step_; }

  static std::string describe(const LossReport& r) {
    std::ostringstream os;
    os << "step " << r.step << " d_loss=" << r.d_loss << " g_adv_loss=" << r.g_adv_loss;
    if (r.hsic_value) os << " hsic=" << *r.hsic_value;
    if (r.aux_loss) os << " aux=" << *r.aux_loss;
    return os.str();
  }

 private:
  static Tape::ParamFilter member_of(const std::vector<Parameter*>& params) {
    std::unordered_set<const Parameter*> set(params.begin(), params.end());
    return [set = std::move(set)](const Parameter& p) { return set.contains(&p); };
  }

  TrainConfig config_;
  Rng rng_;
  Generator generator_;
  Discriminator discriminator_;
  AdamState adam_d_;
  AdamState adam_g_;
  AdamState adam_info_;
  std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Diagnostics

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct EpochMagnitude {
  std::size_t epoch = 0;
  double g_adv = 0.0;          // median |g_adv_loss|
  double weighted_hsic = 0.0;  // median lambda * hsic_value
  double ratio = 0.0;
  bool flagged = false;  // ratio outside [0.1, 10]
};

/// Per-epoch check that the adversarial and HSIC terms share an order of
/// magnitude.
inline std::vector<EpochMagnitude> magnitude_report(const std::vector<LossReport>& history,
                                                    ModelKind kind, double lambda) {
  if (kind != ModelKind::hsic_infogan) {
    throw ContractError("magnitude_report applies to hsic-infogan runs only");
  }
  std::vector<EpochMagnitude> out;
  std::size_t i = 0;
  while (i < history.size()) {
    const std::size_t epoch = history[i].epoch;
    std::vector<double> g, h;
    for (; i < history.size() && history[i].epoch == epoch; ++i) {
      if (!history[i].hsic_value) throw ContractError("history lacks HSIC values");
      g.push_back(std::abs(history[i].g_adv_loss));
      h.push_back(lambda * *history[i].hsic_value);
    }
    EpochMagnitude em{epoch, median(g), median(h), 0.0, false};
    em.ratio = em.g_adv / em.weighted_hsic;
    em.flagged = !(em.ratio >= 0.1 && em.ratio <= 10.0);
    out.push_back(em);
  }
  return out;
}

/// Median of the per-step magnitude ratios; NaN if none were defined.
inline double median_magnitude_ratio(const std::vector<LossReport>& history) {
  std::vector<double> r;
  for (const auto& h : history)
    if (h.magnitude_ratio) r.push_back(*h.magnitude_ratio);
  return median(std::move(r));
}

/// losses.csv: header plus one row per step, empty fields where a column
/// does not apply to the model kind.
inline void write_loss_csv(std::ostream& os, const std::vector<LossReport>& history) {
  os << "step,d_loss,g_adv_loss,hsic_value,aux_loss,magnitude_ratio\n";
  auto opt = [&os](const std::optional<double>& v) {
    if (v) os << *v;
  };
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  for (const auto& r : history) {
    os << r.step << ',' << r.d_loss << ',' << r.g_adv_loss << ',';
    opt(r.hsic_value);
    os << ',';
    opt(r.aux_loss);
    os << ',';
    opt(r.magnitude_ratio);
    os << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace hsic_infogan
