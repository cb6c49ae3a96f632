#include "progmotion/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace progmotion {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'C', 'K'};

class Writer {
 public:
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void raw(const std::string& s) { bytes_ += s; }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }
  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (end_ - pos_ < n) throw CheckpointError(CheckpointErrorKind::kFormat, std::string("checkpoint truncated in ") + what);
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(const std::string& bytes, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n)));
}

template <typename F>
void each_buffer(ModelParams<float>& model, F&& f) {
  for_each_param(model, [&](const std::string& name, Param<float>& p) { f(name, p.value); });
  for_each_state(model, [&](const std::string& name, Tensor<float>& t) { f(name, t); });
}

}  // namespace

std::string serialize_checkpoint(const RunConfig& config, const ModelParams<float>& model_in,
                                 const AdamState* optimizer) {
  if (!(config.model == model_in.config))
    throw std::invalid_argument("save_checkpoint: config echo does not describe the model");
  // Traversal needs mutable references; nothing is modified.
  auto& model = const_cast<ModelParams<float>&>(model_in);
  Writer w;
  w.raw(std::string(kMagic, 4));
  w.uint<std::uint16_t>(kCheckpointVersion);
  const std::string text = to_config_text(config);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.raw(text);

  std::uint32_t count = 0;
  each_buffer(model, [&](const std::string&, Tensor<float>&) { ++count; });
  w.uint<std::uint32_t>(count);
  each_buffer(model, [&](const std::string& name, Tensor<float>& t) {
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t e : t.shape()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(e));
    for (float v : t.values()) w.f32(v);
  });

  w.uint<std::uint8_t>(optimizer ? 1 : 0);
  if (optimizer) {
    w.uint<std::uint64_t>(optimizer->step);
    for_each_param(model, [&](const std::string&, Param<float>& p) {
      for (float v : p.m.values()) w.f32(v);
      for (float v : p.v.values()) w.f32(v);
    });
  }
  w.uint<std::uint32_t>(checksum(w.bytes(), w.bytes().size()));
  return std::move(w.bytes());
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const ModelParams<float>& model,
                     const AdamState* optimizer) {
  const std::string bytes = serialize_checkpoint(config, model, optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrorKind::kIo, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrorKind::kIo, "failed writing checkpoint " + path.string());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError(CheckpointErrorKind::kFormat, "not a checkpoint (bad magic)");
  Reader header(bytes, bytes.size());
  header.raw(4, "magic");
  const auto version = header.uint<std::uint16_t>("version");
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointErrorKind::kVersion, "checkpoint version " + std::to_string(version) +
                                                             " is not supported (expected " +
                                                             std::to_string(kCheckpointVersion) + ")");
  const std::size_t body = bytes.size() - 4;
  Reader tail(bytes, bytes.size());
  tail.raw(body, "payload");
  const auto stored = tail.uint<std::uint32_t>("checksum");
  if (stored != checksum(bytes, body))
    throw CheckpointError(CheckpointErrorKind::kChecksum, "checkpoint checksum mismatch (file is corrupt)");

  Reader r(bytes, body);
  r.raw(6, "header");
  const auto text_len = r.uint<std::uint32_t>("config length");
  Checkpoint ck;
  try {
    apply_config_text(ck.config, r.raw(text_len, "config"));
    ck.model = make_model<float>(ck.config.model, 0);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointErrorKind::kFormat, std::string("checkpoint config echo is invalid: ") + e.what());
  }

  const auto count = r.uint<std::uint32_t>("buffer count");
  std::uint32_t expected = 0;
  each_buffer(ck.model, [&](const std::string&, Tensor<float>&) { ++expected; });
  if (count != expected)
    throw CheckpointError(CheckpointErrorKind::kShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                                                   " buffers but its config implies " +
                                                                   std::to_string(expected));
  each_buffer(ck.model, [&](const std::string& name, Tensor<float>& t) {
    const auto name_len = r.uint<std::uint16_t>("buffer name");
    const std::string stored_name = r.raw(name_len, "buffer name");
    if (stored_name != name)
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                            "checkpoint buffer '" + stored_name + "' where the config implies '" + name + "'");
    const auto rank = r.uint<std::uint8_t>("buffer rank");
    Shape shape;
    for (std::size_t i = 0; i < rank; ++i) shape.push_back(r.uint<std::uint32_t>("buffer extent"));
    if (shape != t.shape())
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch, name + ": checkpoint has shape " + to_string(shape) +
                                                                     ", config implies " + to_string(t.shape()));
    for (float& v : t.values()) v = r.f32("buffer data");
  });

  if (r.uint<std::uint8_t>("optimizer flag")) {
    AdamState s;
    s.step = r.uint<std::uint64_t>("optimizer step");
    for_each_param(ck.model, [&](const std::string&, Param<float>& p) {
      for (float& v : p.m.values()) v = r.f32("optimizer moments");
      for (float& v : p.v.values()) v = r.f32("optimizer moments");
    });
    ck.optimizer = s;
  }
  if (r.pos() != body) throw CheckpointError(CheckpointErrorKind::kFormat, "trailing bytes after checkpoint payload");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorKind::kIo, "cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

void require_compatible(const ModelConfig& ck, const ModelConfig& req, const std::string& requester) {
  auto check = [&](const char* field, auto a, auto b) {
    if (a != b) {
      std::ostringstream os;
      os << "model." << field << ": checkpoint has " << a << ", " << requester << " has " << b;
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch, os.str());
    }
  };
  check("stages", ck.stages, req.stages);
  check("observed", ck.observed, req.observed);
  check("future", ck.future, req.future);
  check("joints", ck.joints, req.joints);
  check("dims", ck.dims, req.dims);
  check("features", ck.features, req.features);
  check("encoder_gcbs", ck.encoder_gcbs, req.encoder_gcbs);
  check("decoder_gcbs", ck.decoder_gcbs, req.decoder_gcbs);
  check("gcb_budget", ck.gcb_budget, req.gcb_budget);
  check("copy_count", ck.copy_count, req.copy_count);
  check("copy_axis", to_string(ck.copy_axis), to_string(req.copy_axis));
  check("share_stage_weights", ck.share_stage_weights, req.share_stage_weights);
  check("projection_bias", ck.projection_bias, req.projection_bias);
}

}  // namespace progmotion
