#pragma once

// Per-horizon evaluation: MPJPE for positions, MAE for angles.
//
// Prediction and ground-truth batches are future segments (B, T_f, M, D).
// Frame indices are 1-based: frame k is the k-th predicted frame.

#include <iosfwd>
#include <string>
#include <vector>

#include "progmotion/tensor.hpp"

namespace progmotion {

enum class Metric { kMpjpe, kMae };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

template <typename T>
double mpjpe_at(const Tensor<T>& pred, const Tensor<T>& gt, std::size_t frame_index);

template <typename T>
double mae_at(const Tensor<T>& pred, const Tensor<T>& gt, std::size_t frame_index);

/// Exact millisecond -> frame conversion; throws if ms·fps/1000 is not an integer.
std::size_t horizon_to_frame(double horizon_ms, double fps);

struct HorizonReport {
  Metric metric = Metric::kMpjpe;
  std::vector<double> horizons_ms;
  std::vector<std::size_t> frames;
  std::vector<double> errors;
  double average = 0.0;  // mean over every future frame 1..T_f, not only the listed horizons
  std::size_t samples = 0;
};

template <typename T>
HorizonReport horizon_report(const Tensor<T>& pred, const Tensor<T>& gt, const std::vector<double>& horizons_ms,
                             double fps, Metric metric);

/// Horizons from the standard grid {80, 160, 320, 400, 560, 1000} ms that fit in `future` frames.
std::vector<double> default_horizons(std::size_t future, double fps);

/// CSV with header `horizon_ms,value`; the all-frame mean is the `mean_all_frames` row.
void write_report_csv(std::ostream& os, const HorizonReport& report);

}  // namespace progmotion
