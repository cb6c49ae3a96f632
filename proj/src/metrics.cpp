#include "progmotion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace progmotion {

std::string to_string(Metric metric) { return metric == Metric::kMpjpe ? "mpjpe" : "mae"; }

Metric parse_metric(const std::string& name) {
  if (name == "mpjpe") return Metric::kMpjpe;
  if (name == "mae") return Metric::kMae;
  throw std::invalid_argument("unknown metric '" + name + "' (expected mpjpe or mae)");
}

namespace {

template <typename T>
void check_frame(const Tensor<T>& pred, const Tensor<T>& gt, std::size_t frame_index) {
  require_same_shape(pred.shape(), gt.shape(), "metric");
  if (pred.rank() != 4) throw ShapeError("metric: expected (B,T_f,M,D) batches, got " + to_string(pred.shape()));
  if (frame_index < 1 || frame_index > pred.extent(kFrames))
    throw std::out_of_range("frame index " + std::to_string(frame_index) + " outside 1.." +
                            std::to_string(pred.extent(kFrames)));
}

}  // namespace

template <typename T>
double mpjpe_at(const Tensor<T>& pred, const Tensor<T>& gt, std::size_t frame_index) {
  check_frame(pred, gt, frame_index);
  const std::size_t b = pred.extent(0), tf = pred.extent(1), m = pred.extent(2), d = pred.extent(3);
  double total = 0.0;
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t mi = 0; mi < m; ++mi) {
      const std::size_t base = ((bi * tf + frame_index - 1) * m + mi) * d;
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double e = static_cast<double>(pred[base + k]) - static_cast<double>(gt[base + k]);
        sq += e * e;
      }
      total += std::sqrt(sq);
    }
  return total / static_cast<double>(b * m);
}

template <typename T>
double mae_at(const Tensor<T>& pred, const Tensor<T>& gt, std::size_t frame_index) {
  check_frame(pred, gt, frame_index);
  const std::size_t b = pred.extent(0), tf = pred.extent(1), md = pred.extent(2) * pred.extent(3);
  double total = 0.0;
  for (std::size_t bi = 0; bi < b; ++bi) {
    const std::size_t base = (bi * tf + frame_index - 1) * md;
    for (std::size_t k = 0; k < md; ++k)
      total += std::abs(static_cast<double>(pred[base + k]) - static_cast<double>(gt[base + k]));
  }
  return total / static_cast<double>(b * md);
}

std::size_t horizon_to_frame(double horizon_ms, double fps) {
  if (!(fps > 0)) throw std::invalid_argument("fps must be positive");
  const double frames = horizon_ms * fps / 1000.0;
  const double rounded = std::round(frames);
  if (!(horizon_ms > 0) || std::abs(frames - rounded) > 1e-9 * std::max(1.0, std::abs(frames))) {
    std::ostringstream os;
    os << "horizon " << horizon_ms << "ms is not a whole number of frames at " << fps << "fps";
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

template <typename T>
HorizonReport horizon_report(const Tensor<T>& pred, const Tensor<T>& gt, const std::vector<double>& horizons_ms,
                             double fps, Metric metric) {
  require_same_shape(pred.shape(), gt.shape(), "horizon_report");
  if (pred.rank() != 4) throw ShapeError("horizon_report: expected (B,T_f,M,D) batches");
  const std::size_t tf = pred.extent(kFrames);
  auto at = [&](std::size_t frame) { return metric == Metric::kMpjpe ? mpjpe_at(pred, gt, frame) : mae_at(pred, gt, frame); };
  HorizonReport r;
  r.metric = metric;
  r.samples = pred.extent(0);
  for (double h : horizons_ms) {
    const std::size_t frame = horizon_to_frame(h, fps);
    if (frame > tf) {
      std::ostringstream os;
      os << "horizon " << h << "ms maps to frame " << frame << " beyond the " << tf << " predicted frames";
      throw std::invalid_argument(os.str());
    }
    r.horizons_ms.push_back(h);
    r.frames.push_back(frame);
    r.errors.push_back(at(frame));
  }
  double sum = 0.0;
  for (std::size_t k = 1; k <= tf; ++k) sum += at(k);
  r.average = sum / static_cast<double>(tf);
  return r;
}

std::vector<double> default_horizons(std::size_t future, double fps) {
  std::vector<double> out;
  for (double h : {80.0, 160.0, 320.0, 400.0, 560.0, 1000.0}) {
    const double frames = h * fps / 1000.0;
    if (std::abs(frames - std::round(frames)) < 1e-9 && frames >= 1 && std::round(frames) <= static_cast<double>(future))
      out.push_back(h);
  }
  return out;
}

void write_report_csv(std::ostream& os, const HorizonReport& report) {
  os << "horizon_ms,value\n" << std::setprecision(10);
  for (std::size_t i = 0; i < report.errors.size(); ++i) os << report.horizons_ms[i] << ',' << report.errors[i] << '\n';
  os << "mean_all_frames," << report.average << '\n';
}

template double mpjpe_at(const Tensor<float>&, const Tensor<float>&, std::size_t);
template double mpjpe_at(const Tensor<double>&, const Tensor<double>&, std::size_t);
template double mae_at(const Tensor<float>&, const Tensor<float>&, std::size_t);
template double mae_at(const Tensor<double>&, const Tensor<double>&, std::size_t);
template HorizonReport horizon_report(const Tensor<float>&, const Tensor<float>&, const std::vector<double>&, double,
                                      Metric);
template HorizonReport horizon_report(const Tensor<double>&, const Tensor<double>&, const std::vector<double>&, double,
                                      Metric);

}  // namespace progmotion
