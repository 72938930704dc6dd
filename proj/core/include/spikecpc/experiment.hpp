#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikecpc/autoencoder.hpp"
#include "spikecpc/cpc.hpp"
#include "spikecpc/rate_coding.hpp"
#include "spikecpc/runconfig.hpp"
#include "spikecpc/stdp_network.hpp"

namespace spikecpc::exp {

enum class EncodingMethod { Autoencoder, Classifier, Random };

std::string to_string(EncodingMethod m);
EncodingMethod encoding_from_string(const std::string& name);

/// Everything one Table-1 configuration needs. Module defaults are
/// overridable through RunConfig keys; unknown keys abort the run.
struct ExperimentConfig {
  int per_class = 250;  // 250 -> MNIST-2500, 500 -> MNIST-5000
  EncodingMethod encoding = EncodingMethod::Autoencoder;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  std::string data_dir = "data";
  std::string images_file = "train-images-idx3-ubyte";
  std::string labels_file = "train-labels-idx1-ubyte";
  std::string out_dir = "out";
  bool train_encoders = false;
  bool quiet = false;

  double val_fraction = 0.1;
  bool wrap = true;

  RateCodingParams codec;
  StdpParams stdp;
  int stdp_epochs = 1;

  sae::ConvLifParams ae;
  double ae_learning_rate = 1e-3;
  int ae_epochs = 20;
  int ae_batch = 64;

  cpc::TrainSchedule schedule;
  int cpc_hidden = 256;
  double cpc_gain_init = 5.0;
  int random_dim = 400;

  std::vector<std::pair<std::string, std::string>> config_echo;

  std::string dataset_name() const { return "MNIST-" + std::to_string(per_class * 10); }
  std::string row_tag() const {
    return "mnist" + std::to_string(per_class * 10) + "_" + to_string(encoding);
  }
  std::string image_path() const { return data_dir + "/" + images_file; }
  std::string label_path() const { return data_dir + "/" + labels_file; }
};

/// Reads every recognized key from the config (defaults otherwise) and
/// records the echo. Callers apply CLI overrides before this and call
/// rc.ensure_all_consumed() after.
ExperimentConfig config_from(RunConfig& rc);

struct SeedRunResult {
  std::uint64_t seed = 0;
  double max_val_accuracy = 0.0;
  int best_epoch = 0;
  int stopping_epoch = 0;
  std::vector<cpc::EpochMetrics> metrics;
};

/// Per-configuration aggregate over seeds (sample std, n-1 denominator;
/// zero for a single seed).
struct RunSummary {
  std::string dataset;
  std::string encoding;
  std::vector<SeedRunResult> runs;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double epoch_mean = 0.0, epoch_std = 0.0;
};

/// Builds (or loads) the configured encoder for one seed and encodes the
/// whole subset. Checkpoints live under <out_dir>/encoders; a missing
/// checkpoint without train_encoders is a hard error naming the artifact.
EncodingSet<float> build_encodings(const ExperimentConfig& cfg, const ClassBalancedSubset& subset,
                                   std::uint64_t seed);

/// One seed: subset, split, encoder, CPC training. Writes metrics.csv and the
/// model checkpoint under <out_dir>/<row_tag>/seed<seed>/.
SeedRunResult run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// All seeds of one configuration plus aggregation artifacts: per-seed
/// metrics CSVs, summary.json and the accuracy-curve SVG.
RunSummary run_experiment(const ExperimentConfig& cfg);

void write_summary_json(const ExperimentConfig& cfg, const RunSummary& summary,
                        const std::string& path);

struct Table1Row {
  int number = 0;  // 1-based row id
  int per_class = 0;
  EncodingMethod encoding = EncodingMethod::Autoencoder;
};

/// The five Table-1 configurations in paper order.
std::vector<Table1Row> table1_rows();

struct Table1Result {
  std::vector<RunSummary> summaries;      // aligned with rows
  std::vector<Table1Row> rows;
  std::string formatted;                  // aligned text table with band flags
  bool ordering_pass_2500 = false;        // autoencoder > classifier > random, gaps >= 0.05
  bool bands_pass = false;                // magnitude bands on the MNIST-2500 rows
};

/// Runs the selected rows (1-based numbers; empty = all five) and formats the
/// aggregate table with pass/fail flags against the acceptance bands.
Table1Result reproduce_table1(const ExperimentConfig& base, const std::vector<int>& only_rows = {});

/// Formats a table from precomputed summaries (used by tests).
std::string format_table1(const std::vector<Table1Row>& rows,
                          const std::vector<RunSummary>& summaries, bool* ordering_pass,
                          bool* bands_pass);

}  // namespace spikecpc::exp
