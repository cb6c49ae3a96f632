#pragma once

// Sequence persistence, windowing and a synthetic motion generator.
//
// SequenceFile layout (little-endian, no padding):
//   char[4] magic "PGMP" | u16 version (1) | f32 fps | u32 L | u32 M | u32 D |
//   f32 payload[L*M*D] in (frame, joint, coordinate) order.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "progmotion/stage_network.hpp"

namespace progmotion {

enum class DataErrorKind {
  kIo,
  kCorruptHeader,
  kUnsupportedVersion,
  kTruncatedPayload,
  kNonFiniteValue,
  kParse,
  kShapeMismatch,
};

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

inline constexpr std::uint16_t kSequenceFormatVersion = 1;

void save_sequence(const MotionSequence& s, const std::filesystem::path& path);
MotionSequence load_sequence(const std::filesystem::path& path);

/// One frame per row, M·D comma-separated numbers per row, no header.
MotionSequence import_csv(const std::filesystem::path& path, double fps, std::size_t joints, std::size_t dims);
void export_csv(const MotionSequence& s, const std::filesystem::path& path);

struct Window {
  Tensor<float> observed;  // (T_h, M, D)
  Tensor<float> future;    // (T_f, M, D)
  std::size_t source = 0;
  std::size_t offset = 0;
};

struct WindowedDataset {
  std::size_t observed = 0;
  std::size_t future = 0;
  std::size_t joints = 0;
  std::size_t dims = 0;
  double fps = 25.0;
  std::vector<Window> windows;
  std::size_t skipped_sources = 0;  // sequences shorter than one window

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
};

/// Windows at offsets 0, stride, 2·stride, ... that fit entirely in `s`.
WindowedDataset sliding_windows(const MotionSequence& s, std::size_t observed, std::size_t future, std::size_t stride,
                                std::size_t source = 0);

/// Concatenates `more` onto `into`; geometry must agree unless `into` is empty.
void append_windows(WindowedDataset& into, const WindowedDataset& more);

template <typename T>
struct Batch {
  Tensor<T> observed;  // (B, T_h, M, D)
  Tensor<T> future;    // (B, T_f, M, D)

  Tensor<T> full() const { return concat_frames(observed, future); }
  std::size_t size() const { return observed.extent(0); }
};

template <typename T>
Batch<T> make_batch(const WindowedDataset& data, const std::vector<std::size_t>& indices);

template <typename T>
Batch<T> make_batch(const WindowedDataset& data);

// ---------------------------------------------------------------------------

struct SynthParams {
  std::size_t components = 3;
  double amplitude_min = 10.0;  // mm
  double amplitude_max = 100.0;
  double frequency_min = 0.2;  // Hz
  double frequency_max = 2.0;
  double drift_max = 10.0;  // mm/s; each trajectory draws a rate in [-drift_max, drift_max]
  double noise_sigma = 1.0;  // mm; samples are clipped to ±6σ
  double fps = 25.0;

  void validate() const;
};

struct SinusoidComponent {
  double amplitude;
  double frequency;
  double phase;
};

struct TrajectoryRecipe {
  std::vector<SinusoidComponent> components;
  double drift = 0.0;
};

/// Bound |value| <= K·a_max + drift_max·L/fps + 6σ.
double synth_bound(const SynthParams& params, std::size_t length);

/// Each of the M·D trajectories is a sum of K random sinusoids plus drift and
/// clipped Gaussian noise.  `recipes`, when given, receives the per-sequence
/// per-trajectory draws.
std::vector<MotionSequence> synth_motion(std::uint64_t seed, std::size_t n_sequences, std::size_t length,
                                         std::size_t joints, std::size_t dims, const SynthParams& params,
                                         std::vector<std::vector<TrajectoryRecipe>>* recipes = nullptr);

/// Keeps frames 0, factor, 2·factor, ...; fps divided by factor.
MotionSequence downsample(const MotionSequence& s, std::size_t factor);

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& name);

/// Seeded per-sequence 70/15/15 assignment.  Counts are rounded so every split
/// fraction is honoured as closely as possible; assignment order is a seeded shuffle.
std::vector<Split> assign_splits(std::size_t n_sequences, std::uint64_t seed);

struct ManifestEntry {
  std::filesystem::path file;  // relative entries resolve against the manifest's directory
  Split split;
};

/// CSV with header "file,split".
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Windows of every manifest sequence in `split`, in manifest order.
WindowedDataset load_split(const std::filesystem::path& manifest, Split split, std::size_t observed,
                           std::size_t future, std::size_t stride);

}  // namespace progmotion
