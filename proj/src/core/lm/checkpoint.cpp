#include "lm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace adaptlm::lm {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'L', 'M', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string& bytes() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (remaining() < n) fail(ErrorKind::format, origin_ + ": checkpoint truncated");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

template <typename Real>
std::string encode(const Checkpoint<Real>& ck, std::uint32_t scalar_bytes) {
  ck.params.check_layout();
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(scalar_bytes);
  const auto& h = ck.hyper;
  w.u32(static_cast<std::uint32_t>(h.num_layers));
  w.u32(static_cast<std::uint32_t>(h.hidden_size));
  w.u32(static_cast<std::uint32_t>(h.embed_size));
  w.u32(static_cast<std::uint32_t>(ck.params.vocab_size));
  w.f64(h.dropout_rate);
  w.f64(h.clip_norm ? *h.clip_norm : -1.0);
  w.f64(h.base_learning_rate);
  w.u64(h.seed);
  w.u32(h.loss_reduction == LossReduction::mean ? 0 : 1);
  w.raw(ck.vocab_fingerprint.data(), ck.vocab_fingerprint.size());
  w.u32(ck.metadata.epochs);
  w.f64(ck.metadata.final_loss);
  w.u32(static_cast<std::uint32_t>(ck.params.tensors.size()));
  for (const auto& t : ck.params.tensors) {
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (Real v : t.values()) {
      if (scalar_bytes == 4) {
        w.f32(static_cast<float>(v));
      } else {
        w.f64(static_cast<double>(v));
      }
    }
  }
  w.u64(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Header {
  CheckpointInfo info;
  TrainingMetadata metadata;
};

Header read_header(Reader& r, const std::string& origin) {
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::format, origin + ": not a checkpoint file");
  Header hd;
  auto& info = hd.info;
  info.format_version = r.u32();
  if (info.format_version != kCheckpointVersion) {
    fail(ErrorKind::format, origin + ": checkpoint format_version " + std::to_string(info.format_version) +
                                " does not match supported version " + std::to_string(kCheckpointVersion));
  }
  info.scalar_bytes = r.u32();
  if (info.scalar_bytes != 4 && info.scalar_bytes != 8) {
    fail(ErrorKind::format, origin + ": unsupported scalar width " + std::to_string(info.scalar_bytes));
  }
  info.hyper.num_layers = r.u32();
  info.hyper.hidden_size = r.u32();
  info.hyper.embed_size = r.u32();
  info.vocab_size = r.u32();
  info.hyper.dropout_rate = r.f64();
  const double clip = r.f64();
  info.hyper.clip_norm = clip < 0.0 ? std::nullopt : std::optional<double>(clip);
  info.hyper.base_learning_rate = r.f64();
  info.hyper.seed = r.u64();
  const auto reduction = r.u32();
  if (reduction > 1) fail(ErrorKind::format, origin + ": bad loss_reduction field");
  info.hyper.loss_reduction = reduction == 0 ? LossReduction::mean : LossReduction::sum;
  r.raw(info.vocab_fingerprint.data(), info.vocab_fingerprint.size());
  hd.metadata.epochs = r.u32();
  hd.metadata.final_loss = r.f64();
  return hd;
}

}  // namespace

template <typename Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = encode(checkpoint, static_cast<std::uint32_t>(sizeof(Real)));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "short write to checkpoint " + path.string());
}

CheckpointInfo peek_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes, path.string());
  return read_header(r, path.string()).info;
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path, const std::optional<Fingerprint>& expected) {
  const std::string origin = path.string();
  const std::string bytes = read_file(path);
  if (bytes.size() < 8 + 8) fail(ErrorKind::format, origin + ": checkpoint truncated");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  Reader tail(std::string_view(bytes).substr(bytes.size() - 8), origin);
  Reader r(body, origin);
  Header hd = read_header(r, origin);
  if (tail.u64() != fnv1a(body)) fail(ErrorKind::format, origin + ": checkpoint checksum mismatch (truncated or corrupted)");

  if (expected && *expected != hd.info.vocab_fingerprint) {
    fail(ErrorKind::format, origin + ": vocabulary fingerprint mismatch: checkpoint " + to_hex(hd.info.vocab_fingerprint) +
                                ", vocabulary " + to_hex(*expected));
  }
  Checkpoint<Real> ck;
  ck.hyper = hd.info.hyper;
  ck.vocab_fingerprint = hd.info.vocab_fingerprint;
  ck.metadata = hd.metadata;
  ck.params.vocab_size = hd.info.vocab_size;
  ck.params.embed_size = ck.hyper.embed_size;
  ck.params.hidden_size = ck.hyper.hidden_size;
  ck.params.num_layers = ck.hyper.num_layers;
  const std::uint32_t count = r.u32();
  if (count != ModelParameters<Real>::tensor_count(ck.hyper.num_layers)) {
    fail(ErrorKind::format, origin + ": tensor count " + std::to_string(count) + " inconsistent with hyperparameters");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    if (rows * cols * hd.info.scalar_bytes > r.remaining()) fail(ErrorKind::format, origin + ": checkpoint truncated");
    std::vector<Real> data(rows * cols);
    for (auto& v : data) v = static_cast<Real>(hd.info.scalar_bytes == 4 ? r.f32() : r.f64());
    ck.params.tensors.emplace_back(rows, cols, std::move(data));
  }
  if (r.remaining() != 0) fail(ErrorKind::format, origin + ": trailing bytes after tensors");
  ck.params.check_layout();
  ck.hyper.validate();
  return ck;
}

template void save_checkpoint<float>(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&, const std::optional<Fingerprint>&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&, const std::optional<Fingerprint>&);

}  // namespace adaptlm::lm
