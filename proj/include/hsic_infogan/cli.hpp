#pragma once

// Command-line front end: train, sweep, traverse and hsic subcommands.
// Exit codes: 0 success, 1 data/format/runtime error, 2 usage error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsic_infogan/checkpoint.hpp"
#include "hsic_infogan/dataio.hpp"
#include "hsic_infogan/evaluation.hpp"
#include "hsic_infogan/kernel_hsic.hpp"
#include "hsic_infogan/sweep.hpp"
#include "hsic_infogan/training.hpp"

namespace hsic_infogan::cli {

namespace fs = std::filesystem;

struct DataOptions {
  std::string dataset = "mnist";
  std::string mnist_images;
  std::string mnist_labels;
  std::optional<std::size_t> subset;
  std::optional<std::size_t> n;  // synthetic dataset size
};

inline constexpr std::size_t kDefaultSyntheticSize = 2000;

/// Resolves the dataset flags. Synthetic data is drawn from its own stream so
/// the training seed stays independent of dataset generation.
inline ImageDataset load_dataset(const DataOptions& o, std::uint64_t seed) {
  if (o.dataset == "mnist") {
    if (o.mnist_images.empty()) throw UsageError("--dataset mnist requires --mnist-images");
    if (o.n) throw UsageError("--n applies to synthetic datasets only");
    std::optional<std::string> labels;
    if (!o.mnist_labels.empty()) labels = o.mnist_labels;
    return load_mnist(o.mnist_images, labels, o.subset);
  }
  if (o.subset) throw UsageError("--subset applies to --dataset mnist only");
  if (!o.mnist_images.empty() || !o.mnist_labels.empty()) {
    throw UsageError("--mnist-images/--mnist-labels apply to --dataset mnist only");
  }
  Rng rng(seed ^ 0xda7a5e7da7a5e7ULL);
  const std::size_t n = o.n.value_or(kDefaultSyntheticSize);
  if (n == 0) throw UsageError("--n must be positive");
  if (o.dataset == "squares") return synth_squares(n, rng);
  if (o.dataset == "gauss2d") {
    // Scaled into the generator's (-1, 1) output range.
    ImageDataset ds = synth_gauss_mixture(n, 8, rng);
    for (double& v : ds.images.data()) v /= 2.5;
    return ds;
  }
  throw UsageError("unknown dataset '" + o.dataset + "' (expected mnist, squares or gauss2d)");
}

inline std::vector<double> parse_grid(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(',', start), s.size());
    double v = 0.0;
    const auto res = std::from_chars(s.data() + start, s.data() + end, v);
    if (res.ec != std::errc{} || res.ptr != s.data() + end) {
      throw UsageError(std::string(flag) + ": malformed number list '" + s + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

inline std::vector<std::size_t> parse_width_flag(const std::string& s, const char* flag) {
  try {
    return parse_widths(s);
  } catch (const FormatError&) {
    throw UsageError(std::string(flag) + ": malformed width list '" + s + "'");
  }
}

/// Headerless numeric CSV, one sample per line.
inline Tensor read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<double> data;
  std::size_t cols = 0, rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto end = std::min(line.find(',', start), line.size());
      std::string field = line.substr(start, end - start);
      const auto a = field.find_first_not_of(" \t");
      const auto b = field.find_last_not_of(" \t");
      field = a == std::string::npos ? "" : field.substr(a, b - a + 1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number '" + field + "'");
      }
      data.push_back(v);
      ++count;
      start = end + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                        " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(path + ": no data rows");
  return Tensor({rows, cols}, std::move(data));
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DataOptions data;
  std::string model = "hsic-infogan";
  double lambda = 1.0;
  double sigma = 5.0;
  std::optional<double> sigma_c;
  double lambda_info = 1.0;
  double lr_d = 2e-4;
  double lr_g = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch = 100;
  std::uint64_t seed = 0;
  std::string out = "run";
  std::string g_hidden = "256,512";
  std::string d_hidden = "512,256";
  std::string z_prior = "uniform";
  bool saturating = false;
  bool split_code = false;
  std::size_t steps = 10;
  std::size_t eval_samples = 100;
  std::size_t distinct_per_class = 50;
  bool dry_run = false;
  // Set from CLI11 counts.
  bool lambda_given = false, sigma_given = false, sigma_c_given = false, lambda_info_given = false;
};

inline TrainConfig build_train_config(const TrainOptions& o) {
  TrainConfig c;
  try {
    c.model = model_kind_from_string(o.model);
    c.latent.z_prior = noise_prior_from_string(o.z_prior);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (c.model != ModelKind::hsic_infogan && (o.lambda_given || o.sigma_given || o.sigma_c_given)) {
    throw UsageError("--lambda/--sigma/--sigma-c only apply to --model hsic-infogan (got " + o.model + ")");
  }
  if (c.model != ModelKind::infogan && o.lambda_info_given) {
    throw UsageError("--lambda-info only applies to --model infogan");
  }
  c.lambda = o.lambda;
  c.lambda_info = o.lambda_info;
  c.sigma_x = o.sigma;
  c.sigma_c = o.sigma_c;
  c.lr_d = o.lr_d;
  c.lr_g = o.lr_g;
  c.batch = o.batch;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.dataset = o.data.dataset;
  c.saturating_g_loss = o.saturating;
  c.split_code_hsic = o.split_code;
  c.g_hidden = parse_width_flag(o.g_hidden, "--g-hidden");
  c.d_hidden = parse_width_flag(o.d_hidden, "--d-hidden");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return c;
}

inline std::string epoch_name(std::size_t epoch) {
  std::ostringstream os;
  os << "ckpt_epoch_" << std::setw(3) << std::setfill('0') << epoch << ".bin";
  return os.str();
}

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
  const TrainConfig cfg = build_train_config(o);
  if (o.steps < 2) throw UsageError("--steps must be at least 2");
  const ImageDataset ds = load_dataset(o.data, cfg.seed);
  const fs::path dir(o.out);
  const ConfigEcho echo = config_echo(cfg, ds.height, ds.width);
  out << "config";
  for (const auto& [k, v] : echo) out << ' ' << k << '=' << v;
  out << "\ndataset " << ds.size() << " images of " << ds.height << "x" << ds.width << "\n";
  if (o.dry_run) return 0;
  fs::create_directories(dir);

  Trainer trainer(cfg, ds.image_dim());
  const auto history = trainer.train(ds.images, [&](std::size_t e, const std::vector<LossReport>& h) {
    save_checkpoint(make_checkpoint(trainer.generator(), trainer.discriminator(), echo),
                    (dir / epoch_name(e + 1)).string());
    const LossReport& last = h.back();
    out << "epoch " << e + 1 << " " << Trainer::describe(last) << "\n";
  });

  {
    std::ofstream csv(dir / "losses.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (dir / "losses.csv").string());
    write_loss_csv(csv, history);
  }
  save_checkpoint(make_checkpoint(trainer.generator(), trainer.discriminator(), echo),
                  (dir / "final.ckpt").string());

  auto gen = as_image_generator(trainer.generator());
  for (std::size_t j = 0; j < cfg.latent.cont_dim; ++j) {
    Rng rng(cfg.seed);
    const ImageGrid grid = traversal_grid(gen, cfg.latent, j, o.steps, rng, ds.height, ds.width);
    write_pgm(grid, (dir / ("traversal_c" + std::to_string(j) + ".pgm")).string());
  }

  std::ostringstream summary;
  summary << std::setprecision(12);
  summary << "steps=" << history.size() << "\n";
  Rng eval_rng(cfg.seed ^ 0x5eed5eed5eedULL);
  if (cfg.model == ModelKind::hsic_infogan) {
    summary << "eval_hsic=" << eval_hsic(gen, cfg.latent, o.eval_samples, cfg.hsic(), eval_rng) << "\n";
    if (!history.empty()) {
      std::size_t flagged = 0;
      for (const auto& em : magnitude_report(history, cfg.model, cfg.lambda)) flagged += em.flagged;
      summary << "median_magnitude_ratio=" << median_magnitude_ratio(history) << "\n";
      summary << "flagged_epochs=" << flagged << "\n";
    }
  }
  summary << "categorical_distinctness="
          << categorical_distinctness(gen, cfg.latent, o.distinct_per_class, eval_rng) << "\n";
  {
    std::ofstream f(dir / "summary.txt", std::ios::trunc);
    f << summary.str();
  }
  out << summary.str();
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  DataOptions data;
  std::string model = "hsic-infogan";
  std::string sigma_grid = "2,3,4,5,6,7,8,9,10";
  std::string lambda_grid = "0.1,0.3,1,3,10";
  double lambda = 1.0;
  std::optional<double> sigma_c;
  std::size_t epochs = 3;
  std::size_t batch = 100;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string out = "sweep";
  std::string g_hidden = "256,512";
  std::string d_hidden = "512,256";
  std::size_t eval_samples = 100;
  std::size_t distinct_per_class = 20;
};

inline SweepPlan build_sweep_plan(const SweepOptions& o) {
  if (o.model != "hsic-infogan") throw UsageError("sweep supports --model hsic-infogan only");
  SweepPlan plan;
  plan.sigmas = parse_grid(o.sigma_grid, "--sigma-grid");
  plan.lambdas = parse_grid(o.lambda_grid, "--lambda-grid");
  plan.phase1_lambda = o.lambda;
  plan.epochs = o.epochs;
  plan.jobs = o.jobs;
  plan.eval_samples = o.eval_samples;
  plan.distinct_per_class = o.distinct_per_class;
  plan.base.model = ModelKind::hsic_infogan;
  plan.base.sigma_c = o.sigma_c;
  plan.base.batch = o.batch;
  plan.base.seed = o.seed;
  plan.base.dataset = o.data.dataset;
  plan.base.lambda = o.lambda;
  plan.base.sigma_x = plan.sigmas.front();
  plan.base.g_hidden = parse_width_flag(o.g_hidden, "--g-hidden");
  plan.base.d_hidden = parse_width_flag(o.d_hidden, "--d-hidden");
  try {
    plan.validate();
    plan.base.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return plan;
}

inline int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  const SweepPlan plan = build_sweep_plan(o);
  const ImageDataset ds = load_dataset(o.data, o.seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const SweepResult result = run_sweep(plan, ds.images);
  {
    std::ofstream csv(dir / "sweep.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (dir / "sweep.csv").string());
    write_sweep_csv(csv, result);
  }
  std::ostringstream rec;
  rec << std::setprecision(12) << "sigma=" << result.recommended.sigma
      << "\nlambda=" << result.recommended.lambda
      << "\nmedian_ratio=" << result.recommended.median_ratio << "\nruns=" << result.runs << "\n";
  {
    std::ofstream f(dir / "recommendation.txt", std::ios::trunc);
    f << rec.str();
  }
  out << rec.str();
  return 0;
}

// ---------------------------------------------------------------------------
// traverse

struct TraverseOptions {
  std::string ckpt;
  std::size_t code = 0;
  std::size_t steps = 10;
  std::string out;
  std::optional<std::uint64_t> seed;  // defaults to the checkpoint's training seed
};

inline int cmd_traverse(const TraverseOptions& o, std::ostream& out) {
  if (o.steps < 2) throw UsageError("--steps must be at least 2");
  const Checkpoint ck = load_checkpoint(o.ckpt);
  GeneratorSnapshot snap = generator_from_checkpoint(ck);
  const LatentSpec spec = snap.generator.config().latent;
  if (o.code >= spec.cont_dim) {
    throw UsageError("--code " + std::to_string(o.code) + " out of range (checkpoint has " +
                     std::to_string(spec.cont_dim) + " continuous codes)");
  }
  std::uint64_t seed = 0;
  if (o.seed) {
    seed = *o.seed;
  } else if (auto s = ck.get("seed")) {
    seed = std::stoull(*s);
  }
  Rng rng(seed);
  const ImageGrid grid = traversal_grid(as_image_generator(snap.generator), spec, o.code, o.steps,
                                        rng, snap.image_height, snap.image_width);
  write_pgm(grid, o.out);
  out << "wrote " << o.out << " (" << grid.width() << "x" << grid.height() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// hsic

struct HsicOptions {
  std::string x;
  std::string z;
  double sigma_x = 1.0;
  double sigma_z = 1.0;
  bool median = false;
};

inline int cmd_hsic(const HsicOptions& o, std::ostream& out) {
  const Tensor x = read_csv_matrix(o.x);
  const Tensor z = read_csv_matrix(o.z);
  if (x.rows() != z.rows()) {
    throw FormatError("row counts differ: " + std::to_string(x.rows()) + " in " + o.x + ", " +
                      std::to_string(z.rows()) + " in " + o.z);
  }
  if (x.rows() < 2) throw FormatError("HSIC needs at least two rows");
  HsicConfig cfg{o.sigma_x, o.sigma_z};
  out << std::setprecision(12);
  if (o.median) {
    cfg.sigma_x = median_heuristic(x);
    cfg.sigma_c = median_heuristic(z);
    out << "sigma_x=" << cfg.sigma_x << "\nsigma_z=" << cfg.sigma_c << "\n";
  } else if (!(cfg.sigma_x > 0.0) || !(cfg.sigma_c > 0.0)) {
    throw UsageError("--sigma-x and --sigma-z must be positive");
  }
  out << hsic_value(x, z, cfg) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

inline void add_data_flags(CLI::App* app, DataOptions& d) {
  app->add_option("--dataset", d.dataset, "mnist, squares or gauss2d")->capture_default_str();
  app->add_option("--mnist-images", d.mnist_images, "decompressed IDX image file");
  app->add_option("--mnist-labels", d.mnist_labels, "decompressed IDX label file");
  app->add_option("--subset", d.subset, "use the first N MNIST images");
  app->add_option("--n", d.n, "synthetic dataset size (default 2000)");
}

/// Parses `args` (without the program name) and runs the chosen subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HSIC-InfoGAN: disentangled GAN training with an HSIC dependence reward"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "train a gan, infogan or hsic-infogan model");
  add_data_flags(t, train.data);
  t->add_option("--model", train.model, "gan, infogan or hsic-infogan")->capture_default_str();
  auto* lambda_opt = t->add_option("--lambda", train.lambda, "HSIC weight")->capture_default_str();
  auto* sigma_opt = t->add_option("--sigma", train.sigma, "image-side kernel bandwidth")->capture_default_str();
  auto* sigma_c_opt = t->add_option("--sigma-c", train.sigma_c, "code-side bandwidth (default: --sigma)");
  auto* lambda_info_opt =
      t->add_option("--lambda-info", train.lambda_info, "InfoGAN weight")->capture_default_str();
  t->add_option("--lr-d", train.lr_d)->capture_default_str();
  t->add_option("--lr-g", train.lr_g)->capture_default_str();
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--batch", train.batch)->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--out", train.out, "output directory")->capture_default_str();
  t->add_option("--g-hidden", train.g_hidden, "generator hidden widths")->capture_default_str();
  t->add_option("--d-hidden", train.d_hidden, "discriminator hidden widths")->capture_default_str();
  t->add_option("--z-prior", train.z_prior, "uniform or normal")->capture_default_str();
  t->add_flag("--saturating-g-loss", train.saturating, "use min log(1 - D(G)) literally");
  t->add_flag("--split-code-hsic", train.split_code, "separate HSIC terms for c_cat and c_cont");
  t->add_option("--steps", train.steps, "traversal columns")->capture_default_str();
  t->add_option("--eval-samples", train.eval_samples)->capture_default_str();
  t->add_option("--distinct-per-class", train.distinct_per_class)->capture_default_str();
  t->add_flag("--dry-run", train.dry_run, "print the resolved configuration and exit");

  SweepOptions sweep;
  auto* s = app.add_subcommand("sweep", "two-phase sigma/lambda search for hsic-infogan");
  add_data_flags(s, sweep.data);
  s->add_option("--model", sweep.model)->capture_default_str();
  s->add_option("--sigma-grid", sweep.sigma_grid)->capture_default_str();
  s->add_option("--lambda-grid", sweep.lambda_grid)->capture_default_str();
  s->add_option("--lambda", sweep.lambda, "lambda used while searching sigma")->capture_default_str();
  s->add_option("--sigma-c", sweep.sigma_c, "fixed code-side bandwidth");
  s->add_option("--epochs", sweep.epochs, "epochs per short run")->capture_default_str();
  s->add_option("--batch", sweep.batch)->capture_default_str();
  s->add_option("--jobs", sweep.jobs, "concurrent runs")->capture_default_str();
  s->add_option("--seed", sweep.seed)->capture_default_str();
  s->add_option("--out", sweep.out)->capture_default_str();
  s->add_option("--g-hidden", sweep.g_hidden)->capture_default_str();
  s->add_option("--d-hidden", sweep.d_hidden)->capture_default_str();
  s->add_option("--eval-samples", sweep.eval_samples)->capture_default_str();
  s->add_option("--distinct-per-class", sweep.distinct_per_class)->capture_default_str();

  TraverseOptions trav;
  auto* v = app.add_subcommand("traverse", "render a latent traversal grid from a checkpoint");
  v->add_option("--ckpt", trav.ckpt)->required();
  v->add_option("--code", trav.code, "continuous code index")->capture_default_str();
  v->add_option("--steps", trav.steps)->capture_default_str();
  v->add_option("--out", trav.out, "output PGM path")->required();
  v->add_option("--seed", trav.seed, "default: the checkpoint's training seed");

  HsicOptions hs;
  auto* h = app.add_subcommand("hsic", "biased HSIC between two CSV sample matrices");
  h->add_option("--x", hs.x)->required();
  h->add_option("--z", hs.z)->required();
  h->add_option("--sigma-x", hs.sigma_x)->capture_default_str();
  h->add_option("--sigma-z", hs.sigma_z)->capture_default_str();
  h->add_flag("--median-heuristic", hs.median, "pick both bandwidths by the median heuristic");

  std::vector<const char*> argv{"hsic_infogan"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (t->parsed()) {
      train.lambda_given = lambda_opt->count() > 0;
      train.sigma_given = sigma_opt->count() > 0;
      train.sigma_c_given = sigma_c_opt->count() > 0;
      train.lambda_info_given = lambda_info_opt->count() > 0;
      return cmd_train(train, out);
    }
    if (s->parsed()) return cmd_sweep(sweep, out);
    if (v->parsed()) return cmd_traverse(trav, out);
    if (h->parsed()) return cmd_hsic(hs, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace hsic_infogan::cli
