#pragma once

// Seeded multi-variant training runs over synthetic data, summarised by the
// median over seeds.  Shared by the `ablate` subcommand and the acceptance suite.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "progmotion/training.hpp"

namespace progmotion {

struct DataProtocol {
  std::size_t sequences = 40;
  std::size_t length = 60;   // frames per synthetic sequence
  std::size_t stride = 4;    // window stride inside a sequence
  std::uint64_t seed = 2024;
  SynthParams synth;
};

struct SplitData {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
};

/// Synthesises `protocol.sequences` sequences, assigns 70/15/15 splits per
/// sequence and windows each split at the model's (T_h, T_f).
SplitData make_split_data(const DataProtocol& protocol, const ModelConfig& model);

struct Variant {
  std::string name;
  ModelConfig model;
  TrainConfig train;
  bool baseline = false;
};

extern const std::vector<std::string> kExperiments;

/// Variants of one named experiment derived from the shared base configuration;
/// exactly one is flagged as the baseline.
std::vector<Variant> ablation_variants(const std::string& experiment, const ModelConfig& model,
                                       const TrainConfig& train);

struct SeedRun {
  std::uint64_t seed = 0;
  HorizonReport test;  // final stage
};

struct VariantResult {
  std::string name;
  bool baseline = false;
  std::vector<SeedRun> runs;
  std::vector<double> median_errors;  // per horizon
  double median_average = 0.0;        // median over seeds of the all-frame mean
};

struct ExperimentResult {
  std::string experiment;
  std::vector<double> horizons_ms;
  Metric metric = Metric::kMpjpe;
  std::vector<VariantResult> variants;
};

using ProgressFn = std::function<void(const std::string& variant, std::uint64_t seed, double test_average)>;

/// Trains every variant once per seed (seed i is base train seed + i) and
/// evaluates the final stage on the test split.
ExperimentResult run_experiment(const std::string& experiment, const std::vector<Variant>& variants,
                                const SplitData& data, std::size_t seeds, const EvalSpec& spec,
                                const ProgressFn& progress = {});

VariantResult run_variant(const Variant& variant, const SplitData& data, std::size_t seeds, const EvalSpec& spec,
                          const ProgressFn& progress = {});

/// variant,baseline,seeds,<metric>_<h>ms...,mean_all_frames (medians over seeds).
void write_experiment_csv(std::ostream& os, const ExperimentResult& result);

double median(std::vector<double> values);

}  // namespace progmotion
