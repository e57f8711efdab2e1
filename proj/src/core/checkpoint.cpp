#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace ff {
namespace {

constexpr char kMagic[6] = {'F', 'F', 'N', 'E', 'T', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) raise(Errc::io_failure, "checkpoint: cannot write " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f64_array(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  void check() {
    if (!out_) raise(Errc::io_failure, "checkpoint: write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) raise(Errc::missing_file, "checkpoint: cannot open " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      raise(Errc::truncated, "checkpoint: truncated file " + path_);
    }
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint8_t b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void f64_array(std::vector<double>& v) {
    for (double& x : v) x = f64();
  }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_adam(Writer& w, const AdamState& a) {
  w.u64(a.t);
  w.f64_array(a.m);
  w.f64_array(a.v);
}

void read_adam(Reader& r, AdamState& a, std::size_t n) {
  a.resize(n);
  a.t = r.u64();
  r.f64_array(a.m);
  r.f64_array(a.v);
}

void write_codebook(Writer& w, const LabelCodebook& book) {
  w.u64(book.pattern_size());
  w.f64(book.density());
  const Rng::Snapshot snap = book.pattern_rng().snapshot();
  w.u64(snap.seed);
  for (int i = 0; i < 4; ++i) w.u64(snap.state[i]);
  w.u8(snap.has_cached ? 1 : 0);
  w.f64(snap.cached);
  w.u32(static_cast<std::uint32_t>(book.raw_patterns().size()));
  for (const auto& [label, pattern] : book.raw_patterns()) {
    w.i32(label);
    w.bytes(pattern.data(), pattern.size());
  }
}

LabelCodebook read_codebook(Reader& r) {
  const std::size_t pattern_size = r.u64();
  const double density = r.f64();
  Rng::Snapshot snap;
  snap.seed = r.u64();
  for (int i = 0; i < 4; ++i) snap.state[i] = r.u64();
  snap.has_cached = r.u8() != 0;
  snap.cached = r.f64();
  const std::uint32_t count = r.u32();
  std::map<int, std::vector<std::uint8_t>> patterns;
  for (std::uint32_t c = 0; c < count; ++c) {
    const int label = r.i32();
    std::vector<std::uint8_t> bits(pattern_size);
    r.bytes(bits.data(), bits.size());
    patterns.emplace(label, std::move(bits));
  }
  return LabelCodebook::restore(pattern_size, density, Rng::from_snapshot(snap),
                                std::move(patterns));
}

void write_magic(Writer& w, CheckpointKind kind) {
  w.bytes(kMagic, sizeof(kMagic));
  w.u8(static_cast<std::uint8_t>(kind));
}

CheckpointKind read_magic(Reader& r) {
  char magic[6];
  r.bytes(magic, 6);
  if (std::memcmp(magic, kMagic, 6) != 0) {
    raise(Errc::bad_format, "checkpoint: bad magic (not an FFNET1 file)");
  }
  const std::uint8_t kind = r.u8();
  if (kind > 2) raise(Errc::bad_format, "checkpoint: unknown model kind");
  return static_cast<CheckpointKind>(kind);
}

}  // namespace

void save_ff_checkpoint(const std::string& path, const FFNetwork& net,
                        const LabelCodebook& book) {
  Writer w(path);
  const NetworkConfig& cfg = net.config();
  write_magic(w, cfg.algorithm == Algorithm::Ffa ? CheckpointKind::Ffa
                                                 : CheckpointKind::Sffa);
  w.f64(cfg.theta);
  w.f64(cfg.epsilon);
  w.f64(cfg.clamp);
  w.f64(cfg.reg_alpha);
  w.u8(cfg.regularize ? 1 : 0);
  w.u8(cfg.residual_input ? 1 : 0);
  w.u8(cfg.skip_first_layer_goodness ? 1 : 0);
  w.u8(cfg.divide_by_squared_norm ? 1 : 0);
  w.u8(cfg.goodness_pre_kwta ? 1 : 0);
  w.u64(net.input_dim());
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const FFLayer& layer : net.layers()) {
    w.u64(layer.in_dim());
    w.u64(layer.width());
    w.u8(layer.activation == Activation::ReLU ? 0 : 1);
    w.u64(layer.pos_count);
    w.u64(layer.kwta_k);
    w.f64_array(layer.weights.data());
    w.f64_array(layer.bias);
    write_adam(w, layer.adam_w);
    write_adam(w, layer.adam_b);
  }
  write_codebook(w, book);
  w.check();
}

LoadedFf load_ff_checkpoint(const std::string& path) {
  Reader r(path);
  const CheckpointKind kind = read_magic(r);
  if (kind == CheckpointKind::Backprop) {
    raise(Errc::bad_format, "checkpoint: " + path + " holds a backprop model");
  }
  NetworkConfig cfg;
  cfg.algorithm = kind == CheckpointKind::Ffa ? Algorithm::Ffa : Algorithm::Sffa;
  cfg.theta = r.f64();
  cfg.epsilon = r.f64();
  cfg.clamp = r.f64();
  cfg.reg_alpha = r.f64();
  cfg.regularize = r.u8() != 0;
  cfg.residual_input = r.u8() != 0;
  cfg.skip_first_layer_goodness = r.u8() != 0;
  cfg.divide_by_squared_norm = r.u8() != 0;
  cfg.goodness_pre_kwta = r.u8() != 0;
  const std::size_t input_dim = r.u64();
  const std::uint32_t layer_count = r.u32();

  std::vector<FFLayer> layers(layer_count);
  std::vector<std::size_t> widths;
  Activation activation = Activation::ReLU;
  std::size_t kwta_k = 0;
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    FFLayer& layer = layers[li];
    const std::size_t in_dim = r.u64();
    const std::size_t width = r.u64();
    layer.weights = Matrix(in_dim, width);
    layer.activation = r.u8() == 0 ? Activation::ReLU : Activation::Sigmoid;
    layer.pos_count = r.u64();
    layer.kwta_k = r.u64();
    r.f64_array(layer.weights.data());
    layer.bias.resize(width);
    r.f64_array(layer.bias);
    read_adam(r, layer.adam_w, layer.weights.size());
    read_adam(r, layer.adam_b, width);
    widths.push_back(width);
    activation = layer.activation;
    kwta_k = layer.kwta_k;
  }
  LabelCodebook book = read_codebook(r);

  Rng scratch(0);
  FFNetwork net(cfg, input_dim, widths, activation, kwta_k, scratch);
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    if (net.layers()[li].in_dim() != layers[li].in_dim()) {
      raise(Errc::bad_format, "checkpoint: layer " + std::to_string(li) +
                                  " input dim inconsistent with the network layout");
    }
    net.layers()[li] = std::move(layers[li]);
  }
  return LoadedFf{std::move(net), std::move(book)};
}

void save_mlp_checkpoint(const std::string& path, const Mlp& mlp) {
  Writer w(path);
  write_magic(w, CheckpointKind::Backprop);
  w.u64(mlp.input_dim());
  w.u32(static_cast<std::uint32_t>(mlp.hidden().size()));
  for (const Mlp::Dense& layer : mlp.hidden()) {
    w.u64(layer.w.rows());
    w.u64(layer.w.cols());
    w.f64_array(layer.w.data());
    w.f64_array(layer.b);
    write_adam(w, layer.adam_w);
    write_adam(w, layer.adam_b);
  }
  w.u32(static_cast<std::uint32_t>(mlp.heads().size()));
  for (const Mlp::Dense& head : mlp.heads()) {
    w.u64(head.w.rows());
    w.u64(head.w.cols());
    w.f64_array(head.w.data());
    w.f64_array(head.b);
    write_adam(w, head.adam_w);
    write_adam(w, head.adam_b);
  }
  w.check();
}

Mlp load_mlp_checkpoint(const std::string& path) {
  Reader r(path);
  if (read_magic(r) != CheckpointKind::Backprop) {
    raise(Errc::bad_format, "checkpoint: " + path + " holds a forward-forward model");
  }
  const std::size_t input_dim = r.u64();
  const std::uint32_t hidden_count = r.u32();
  Rng scratch(0);
  Mlp mlp(input_dim, {}, scratch);
  for (std::uint32_t li = 0; li < hidden_count; ++li) {
    Mlp::Dense layer;
    const std::size_t rows = r.u64();
    const std::size_t cols = r.u64();
    layer.w = Matrix(rows, cols);
    r.f64_array(layer.w.data());
    layer.b.resize(cols);
    r.f64_array(layer.b);
    read_adam(r, layer.adam_w, layer.w.size());
    read_adam(r, layer.adam_b, cols);
    mlp.hidden().push_back(std::move(layer));
  }
  const std::uint32_t head_count = r.u32();
  for (std::uint32_t hi = 0; hi < head_count; ++hi) {
    Mlp::Dense head;
    const std::size_t rows = r.u64();
    const std::size_t cols = r.u64();
    head.w = Matrix(rows, cols);
    r.f64_array(head.w.data());
    head.b.resize(rows);
    r.f64_array(head.b);
    read_adam(r, head.adam_w, head.w.size());
    read_adam(r, head.adam_b, rows);
    mlp.heads().push_back(std::move(head));
  }
  return mlp;
}

CheckpointKind peek_checkpoint_kind(const std::string& path) {
  Reader r(path);
  return read_magic(r);
}

}  // namespace ff
