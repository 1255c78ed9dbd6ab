#pragma once

// Checkpoint container (all integers and floats little-endian):
//
//   "HIGN"                       4 bytes
//   version                      u32
//   tensor count                 u32
//   per tensor:
//     name length, name          u32, UTF-8 bytes
//     rank, dims                 u32, u64 x rank
//     values                     f64 x product(dims)
//   config length, config        u32, UTF-8 "key=value\n" lines

#include <bit>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hsic_infogan/dataio.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/networks.hpp"
#include "hsic_infogan/tensor.hpp"
#include "hsic_infogan/training.hpp"

namespace hsic_infogan {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'H', 'I', 'G', 'N'};

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  ConfigEcho config;

  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : config)
      if (k == key) return v;
    return std::nullopt;
  }

  const Tensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  }
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw LengthError("checkpoint: unexpected end of data");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(static_cast<std::uint32_t>(t.value.rank()));
    for (auto d : t.value.shape()) w.u64(d);
    for (double v : t.value.data()) w.f64(v);
  }
  std::string block;
  for (const auto& [k, v] : ck.config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ConfigError("checkpoint config entry '" + k + "' cannot be encoded");
    }
    block += k + "=" + v + "\n";
  }
  w.u32(static_cast<std::uint32_t>(block.size()));
  w.bytes(block);
  return w.take();
}

inline Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw LengthError("checkpoint: shorter than its magic");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, kCheckpointMagic)) {
    throw FormatError("checkpoint: bad magic (expected \"HIGN\")");
  }
  detail::ByteReader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported format version " + std::to_string(version) +
                       " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw ShapeError("checkpoint: tensor '" + t.name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0 || n > (std::uint64_t{1} << 40) / d) {
        throw ShapeError("checkpoint: tensor '" + t.name + "' has an invalid extent");
      }
      n *= d;
    }
    if (r.remaining() / 8 < n) throw LengthError("checkpoint: tensor '" + t.name + "' is truncated");
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64();
    t.value = Tensor(std::move(shape), std::move(data));
    ck.tensors.push_back(std::move(t));
  }
  const std::string block = r.str(r.u32());
  if (r.remaining() != 0) throw LengthError("checkpoint: trailing bytes after config block");
  std::istringstream is(block);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed config line '" + line + "'");
    ck.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  write_file(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

// ---------------------------------------------------------------------------
// Model <-> checkpoint

inline std::string join_widths(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

inline std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(',', start), s.size());
    std::size_t v = 0;
    const auto res = std::from_chars(s.data() + start, s.data() + end, v);
    if (res.ec != std::errc{} || res.ptr != s.data() + end) {
      throw FormatError("malformed width list '" + s + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Key=value echo of a training configuration plus the image geometry.
inline ConfigEcho config_echo(const TrainConfig& c, std::size_t height, std::size_t width) {
  ConfigEcho e{
      {"model", to_string(c.model)},
      {"dataset", c.dataset},
      {"lambda", format_double(c.lambda)},
      {"lambda_info", format_double(c.lambda_info)},
      {"sigma_x", format_double(c.sigma_x)},
      {"sigma_c", format_double(c.hsic().sigma_c)},
      {"lr_d", format_double(c.lr_d)},
      {"lr_g", format_double(c.lr_g)},
      {"batch", std::to_string(c.batch)},
      {"epochs", std::to_string(c.epochs)},
      {"seed", std::to_string(c.seed)},
      {"saturating_g_loss", c.saturating_g_loss ? "1" : "0"},
      {"split_code_hsic", c.split_code_hsic ? "1" : "0"},
      {"z_dim", std::to_string(c.latent.z_dim)},
      {"cat_classes", std::to_string(c.latent.cat_classes)},
      {"cont_dim", std::to_string(c.latent.cont_dim)},
      {"z_prior", to_string(c.latent.z_prior)},
      {"g_hidden", join_widths(c.g_hidden)},
      {"d_hidden", join_widths(c.d_hidden)},
      {"image_height", std::to_string(height)},
      {"image_width", std::to_string(width)},
  };
  return e;
}

inline Checkpoint make_checkpoint(Generator& g, Discriminator& d, const ConfigEcho& echo) {
  Checkpoint ck;
  for (Parameter* p : g.parameters()) ck.tensors.push_back({p->name, p->value});
  for (Parameter* p : d.parameters()) ck.tensors.push_back({p->name, p->value});
  ck.config = echo;
  return ck;
}

/// Copies matching named tensors into `params`; every parameter must be present
/// with its exact shape.
inline void load_parameters(const Checkpoint& ck, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const Tensor* t = ck.find(p->name);
    if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + p->name + "'");
    if (t->shape() != p->value.shape()) {
      throw DimensionError("checkpoint tensor '" + p->name + "' has shape " + shape_str(t->shape()) +
                           ", model expects " + shape_str(p->value.shape()));
    }
    p->value = *t;
    p->zero_grad();
  }
}

struct GeneratorSnapshot {
  Generator generator;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
};

/// Rebuilds the generator recorded in a checkpoint.
inline GeneratorSnapshot generator_from_checkpoint(const Checkpoint& ck) {
  auto need = [&ck](const std::string& key) {
    auto v = ck.get(key);
    if (!v) throw FormatError("checkpoint config lacks '" + key + "'");
    return *v;
  };
  auto num = [&need](const std::string& key) {
    const auto w = parse_widths(need(key));
    if (w.size() != 1) throw FormatError("checkpoint config '" + key + "' is not a single integer");
    return w.front();
  };
  GeneratorConfig gc;
  gc.latent.z_dim = num("z_dim");
  gc.latent.cat_classes = num("cat_classes");
  gc.latent.cont_dim = num("cont_dim");
  gc.latent.z_prior = noise_prior_from_string(need("z_prior"));
  gc.hidden = parse_widths(need("g_hidden"));
  GeneratorSnapshot snap{Generator{}, num("image_height"), num("image_width")};
  gc.image_dim = snap.image_height * snap.image_width;
  snap.generator = Generator(gc);
  load_parameters(ck, snap.generator.parameters());
  return snap;
}

}  // namespace hsic_infogan
