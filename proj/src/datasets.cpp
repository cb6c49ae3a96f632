#include "progmotion/datasets.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace progmotion {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'M', 'P'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 3 * 4;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrorKind::kIo, "short write to " + path.string());
}

void check_sequence(const MotionSequence& s, const char* what) {
  if (s.frames.rank() != 3) throw DataError(DataErrorKind::kShapeMismatch, std::string(what) + ": expected (L,M,D) frames");
  if (!all_finite(s.frames)) throw DataError(DataErrorKind::kNonFiniteValue, std::string(what) + ": non-finite value");
}

}  // namespace

void save_sequence(const MotionSequence& s, const std::filesystem::path& path) {
  check_sequence(s, "save_sequence");
  std::string bytes(kMagic, 4);
  put_u16(bytes, kSequenceFormatVersion);
  put_f32(bytes, static_cast<float>(s.fps));
  put_u32(bytes, static_cast<std::uint32_t>(s.length()));
  put_u32(bytes, static_cast<std::uint32_t>(s.joints()));
  put_u32(bytes, static_cast<std::uint32_t>(s.dims()));
  bytes.reserve(bytes.size() + 4 * s.frames.size());
  for (float v : s.frames.values()) put_f32(bytes, v);
  write_file(path, bytes);
}

MotionSequence load_sequence(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = path.string();
  if (bytes.size() < kHeaderBytes || std::memcmp(p, kMagic, 4) != 0)
    throw DataError(DataErrorKind::kCorruptHeader, where + ": not a sequence file (bad magic or short header)");
  const std::uint16_t version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (version != kSequenceFormatVersion)
    throw DataError(DataErrorKind::kUnsupportedVersion, where + ": unsupported format version " + std::to_string(version));
  const float fps = std::bit_cast<float>(get_u32(p + 6));
  const std::uint64_t l = get_u32(p + 10), m = get_u32(p + 14), d = get_u32(p + 18);
  if (!(std::isfinite(fps) && fps > 0) || l == 0 || m == 0 || d == 0)
    throw DataError(DataErrorKind::kCorruptHeader, where + ": invalid header fields");
  const std::uint64_t expected = l * m * d * 4;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < expected)
    throw DataError(DataErrorKind::kTruncatedPayload, where + ": payload has " + std::to_string(payload) +
                                                          " bytes, header declares " + std::to_string(expected));
  if (payload > expected)
    throw DataError(DataErrorKind::kCorruptHeader, where + ": " + std::to_string(payload - expected) +
                                                       " trailing bytes after payload");
  std::vector<float> values(l * m * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(p + kHeaderBytes + 4 * i));
    if (!std::isfinite(values[i]))
      throw DataError(DataErrorKind::kNonFiniteValue, where + ": non-finite value at element " + std::to_string(i));
  }
  MotionSequence s;
  s.fps = fps;
  s.frames = Tensor<float>({l, m, d}, std::move(values));
  return s;
}

MotionSequence import_csv(const std::filesystem::path& path, double fps, std::size_t joints, std::size_t dims) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kIo, "cannot open " + path.string());
  const std::size_t cols = joints * dims;
  if (cols == 0) throw DataError(DataErrorKind::kParse, "import_csv: joints and dims must be positive");
  std::vector<float> values;
  std::string line;
  std::size_t line_no = 0, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      std::string_view cell(line.data() + start, end - start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      float v = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw DataError(DataErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                                   std::string(cell) + "'");
      if (!std::isfinite(v))
        throw DataError(DataErrorKind::kNonFiniteValue, path.string() + ":" + std::to_string(line_no) + ": non-finite value");
      values.push_back(v);
      ++count;
      if (end == line.size()) break;
      start = end + 1;
    }
    if (count != cols)
      throw DataError(DataErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                 std::to_string(cols) + " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw DataError(DataErrorKind::kParse, path.string() + ": no rows");
  MotionSequence s;
  s.fps = fps;
  s.frames = Tensor<float>({rows, joints, dims}, std::move(values));
  return s;
}

void export_csv(const MotionSequence& s, const std::filesystem::path& path) {
  check_sequence(s, "export_csv");
  std::ofstream out(path);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path.string());
  out << std::setprecision(9);
  const std::size_t cols = s.joints() * s.dims();
  for (std::size_t l = 0; l < s.length(); ++l) {
    for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << s.frames[l * cols + c];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

WindowedDataset sliding_windows(const MotionSequence& s, std::size_t observed, std::size_t future, std::size_t stride,
                                std::size_t source) {
  if (stride < 1) throw std::invalid_argument("sliding_windows: stride must be >= 1");
  if (observed < 1 || future < 1) throw std::invalid_argument("sliding_windows: window lengths must be >= 1");
  WindowedDataset data;
  data.observed = observed;
  data.future = future;
  data.joints = s.joints();
  data.dims = s.dims();
  data.fps = s.fps;
  const std::size_t span = observed + future;
  if (s.length() < span) {
    data.skipped_sources = 1;
    return data;
  }
  for (std::size_t off = 0; off + span <= s.length(); off += stride) {
    Window w;
    w.observed = slice_axis(s.frames, 0, off, observed);
    w.future = slice_axis(s.frames, 0, off + observed, future);
    w.source = source;
    w.offset = off;
    data.windows.push_back(std::move(w));
  }
  return data;
}

void append_windows(WindowedDataset& into, const WindowedDataset& more) {
  if (into.empty() && into.skipped_sources == 0 && into.joints == 0) {
    into = more;
    return;
  }
  if (into.observed != more.observed || into.future != more.future || into.joints != more.joints ||
      into.dims != more.dims)
    throw DataError(DataErrorKind::kShapeMismatch, "append_windows: window geometry differs between sources");
  into.windows.insert(into.windows.end(), more.windows.begin(), more.windows.end());
  into.skipped_sources += more.skipped_sources;
}

template <typename T>
Batch<T> make_batch(const WindowedDataset& data, const std::vector<std::size_t>& indices) {
  const std::size_t b = indices.size();
  const std::size_t pose = data.joints * data.dims;
  Batch<T> out;
  out.observed = Tensor<T>({b, data.observed, data.joints, data.dims});
  out.future = Tensor<T>({b, data.future, data.joints, data.dims});
  for (std::size_t i = 0; i < b; ++i) {
    const Window& w = data.windows.at(indices[i]);
    std::copy(w.observed.values().begin(), w.observed.values().end(), out.observed.data() + i * data.observed * pose);
    std::copy(w.future.values().begin(), w.future.values().end(), out.future.data() + i * data.future * pose);
  }
  return out;
}

template <typename T>
Batch<T> make_batch(const WindowedDataset& data) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch<T>(data, all);
}

template Batch<float> make_batch(const WindowedDataset&, const std::vector<std::size_t>&);
template Batch<double> make_batch(const WindowedDataset&, const std::vector<std::size_t>&);
template Batch<float> make_batch(const WindowedDataset&);
template Batch<double> make_batch(const WindowedDataset&);

// ---------------------------------------------------------------------------

void SynthParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("synth: " + what); };
  if (components < 1) fail("components must be >= 1");
  if (!(amplitude_min >= 0 && amplitude_min <= amplitude_max)) fail("amplitude range must satisfy 0 <= min <= max");
  if (!(frequency_min >= 0 && frequency_min <= frequency_max)) fail("frequency range must satisfy 0 <= min <= max");
  if (!(drift_max >= 0)) fail("drift must be >= 0");
  if (!(noise_sigma >= 0)) fail("noise sigma must be >= 0");
  if (!(fps > 0)) fail("fps must be positive");
}

double synth_bound(const SynthParams& p, std::size_t length) {
  return static_cast<double>(p.components) * p.amplitude_max + p.drift_max * static_cast<double>(length) / p.fps +
         6.0 * p.noise_sigma;
}

std::vector<MotionSequence> synth_motion(std::uint64_t seed, std::size_t n_sequences, std::size_t length,
                                         std::size_t joints, std::size_t dims, const SynthParams& params,
                                         std::vector<std::vector<TrajectoryRecipe>>* recipes) {
  params.validate();
  if (n_sequences > 0 && (length == 0 || joints == 0 || dims == 0))
    throw std::invalid_argument("synth: length, joints and dims must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> amp(params.amplitude_min, params.amplitude_max);
  std::uniform_real_distribution<double> freq(params.frequency_min, params.frequency_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> drift(-params.drift_max, params.drift_max);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t trajectories = joints * dims;

  std::vector<MotionSequence> out;
  if (recipes) recipes->clear();
  for (std::size_t n = 0; n < n_sequences; ++n) {
    std::vector<TrajectoryRecipe> recipe(trajectories);
    for (auto& r : recipe) {
      for (std::size_t k = 0; k < params.components; ++k) r.components.push_back({amp(rng), freq(rng), phase(rng)});
      r.drift = drift(rng);
    }
    MotionSequence s;
    s.fps = params.fps;
    s.frames = Tensor<float>({length, joints, dims});
    for (std::size_t l = 0; l < length; ++l) {
      const double t = static_cast<double>(l) / params.fps;
      for (std::size_t j = 0; j < trajectories; ++j) {
        double v = recipe[j].drift * t;
        for (const auto& c : recipe[j].components) v += c.amplitude * std::sin(2.0 * std::numbers::pi * c.frequency * t + c.phase);
        if (params.noise_sigma > 0) v += params.noise_sigma * std::clamp(noise(rng), -6.0, 6.0);
        s.frames[l * trajectories + j] = static_cast<float>(v);
      }
    }
    out.push_back(std::move(s));
    if (recipes) recipes->push_back(std::move(recipe));
  }
  return out;
}

MotionSequence downsample(const MotionSequence& s, std::size_t factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  const std::size_t kept = (s.length() + factor - 1) / factor;
  const std::size_t pose = s.joints() * s.dims();
  MotionSequence out;
  out.fps = s.fps / static_cast<double>(factor);
  out.frames = Tensor<float>({kept, s.joints(), s.dims()});
  for (std::size_t i = 0; i < kept; ++i)
    std::copy_n(s.frames.data() + i * factor * pose, pose, out.frames.data() + i * pose);
  return out;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<Split> assign_splits(std::size_t n, std::uint64_t seed) {
  std::size_t n_val = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n)));
  std::size_t n_test = n_val;
  if (n >= 3) {
    n_val = std::max<std::size_t>(n_val, 1);
    n_test = std::max<std::size_t>(n_test, 1);
  }
  if (n_val + n_test > n) n_val = n_test = 0;
  std::vector<Split> splits(n, Split::kTrain);
  for (std::size_t i = 0; i < n_val; ++i) splits[n - n_test - n_val + i] = Split::kVal;
  for (std::size_t i = 0; i < n_test; ++i) splits[n - n_test + i] = Split::kTest;
  Rng rng(seed);
  std::shuffle(splits.begin(), splits.end(), rng);
  return splits;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::string out = "file,split\n";
  for (const auto& e : entries) {
    const std::string f = e.file.generic_string();
    if (f.find_first_of(",\n") != std::string::npos)
      throw DataError(DataErrorKind::kIo, "manifest entry '" + f + "' contains a comma or newline");
    out += f + "," + to_string(e.split) + "\n";
  }
  write_file(path, out);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "file,split")
    throw DataError(DataErrorKind::kParse, path.string() + ": expected header 'file,split'");
  std::vector<ManifestEntry> out;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError(DataErrorKind::kParse, path.string() + ":" + std::to_string(row) + ": expected file,split");
    std::filesystem::path file = line.substr(0, comma);
    if (file.is_relative()) file = path.parent_path() / file;
    try {
      out.push_back({file, parse_split(line.substr(comma + 1))});
    } catch (const std::invalid_argument& e) {
      throw DataError(DataErrorKind::kParse, path.string() + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

WindowedDataset load_split(const std::filesystem::path& manifest, Split split, std::size_t observed,
                           std::size_t future, std::size_t stride) {
  WindowedDataset out;
  out.observed = observed;
  out.future = future;
  const auto entries = read_manifest(manifest);
  bool first = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split != split) continue;
    const MotionSequence s = load_sequence(entries[i].file);
    if (first) {
      out.joints = s.joints();
      out.dims = s.dims();
      out.fps = s.fps;
      first = false;
    } else if (s.joints() != out.joints || s.dims() != out.dims || s.fps != out.fps) {
      throw DataError(DataErrorKind::kShapeMismatch, entries[i].file.string() + ": geometry differs from earlier sequences");
    }
    WindowedDataset w = sliding_windows(s, observed, future, stride, i);
    out.skipped_sources += w.skipped_sources;
    w.skipped_sources = 0;
    append_windows(out, w);
  }
  return out;
}

}  // namespace progmotion
