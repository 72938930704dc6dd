// Command-line harness: data verification, encoder training, encoding dumps,
// CPC training/evaluation, the full results-table reproduction and the
// gradient-check suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spikecpc/encodings.hpp"
#include "spikecpc/errors.hpp"
#include "spikecpc/experiment.hpp"
#include "spikecpc/gradsuite.hpp"
#include "spikecpc/sha256.hpp"

namespace fs = std::filesystem;
using namespace spikecpc;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  long dataset = 0;
  std::string encoding;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool train_encoders = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value lines)");
  cmd->add_option("--data", opts.data_dir, "data directory with the IDX files");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--dataset", opts.dataset, "subset size: 2500 or 5000")
      ->check(CLI::IsMember({2500, 5000}));
  cmd->add_option("--encoding", opts.encoding, "encoding method")
      ->check(CLI::IsMember({"autoencoder", "classifier", "random"}));
  auto* seed_opt = cmd->add_option("--seed", opts.seed, "single seed (overrides the seeds list)");
  cmd->callback([&opts, seed_opt]() { opts.seed_set = seed_opt->count() > 0; });
  cmd->add_flag("--train-encoders", opts.train_encoders, "train missing encoder checkpoints");
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

exp::ExperimentConfig build_config(const CommonOpts& opts) {
  RunConfig rc = opts.config_path.empty() ? RunConfig() : RunConfig::from_file(opts.config_path);
  if (!opts.data_dir.empty()) rc.set("data.dir", opts.data_dir);
  if (!opts.out_dir.empty()) rc.set("out.dir", opts.out_dir);
  if (opts.dataset != 0) rc.set("dataset", std::to_string(opts.dataset));
  if (!opts.encoding.empty()) rc.set("encoding", opts.encoding);
  if (opts.seed_set) rc.set("seeds", std::to_string(opts.seed));
  if (opts.train_encoders) rc.set("train_encoders", "true");
  if (opts.quiet) rc.set("quiet", "true");
  exp::ExperimentConfig cfg = exp::config_from(rc);
  rc.ensure_all_consumed();
  return cfg;
}

int cmd_fetch_data(const CommonOpts& opts) {
  const exp::ExperimentConfig cfg = build_config(opts);
  const std::string image_path = cfg.image_path(), label_path = cfg.label_path();
  for (const auto& p : {image_path, label_path}) {
    if (!fs::exists(p)) {
      std::fprintf(stderr, "missing %s\nPlace the MNIST IDX files there (see data/README.md).\n",
                   p.c_str());
      return 1;
    }
  }
  const auto images = load_idx(image_path, label_path);
  int histogram[10] = {};
  for (const auto& img : images) histogram[img.label]++;
  std::printf("%s: %zu images, 28x28\n", image_path.c_str(), images.size());
  std::printf("class histogram:");
  for (int c = 0; c < 10; ++c) std::printf(" %d:%d", c, histogram[c]);
  std::printf("\n");

  const std::string checksums_path = cfg.data_dir + "/checksums.txt";
  bool all_ok = true;
  for (const auto& p : {image_path, label_path}) {
    const std::string digest = sha256_file_hex(p);
    std::string status = "sha256 " + digest;
    if (fs::exists(checksums_path)) {
      std::ifstream in(checksums_path);
      std::string line;
      bool found = false, match = false;
      const std::string base = fs::path(p).filename().string();
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string hex, name;
        ss >> hex >> name;
        if (name == base) {
          found = true;
          match = hex == digest;
        }
      }
      if (!found) {
        status += " (not in checksums.txt)";
      } else if (match) {
        status += " VERIFIED";
      } else {
        status += " MISMATCH against checksums.txt";
        all_ok = false;
      }
    }
    std::printf("%s: %s\n", p.c_str(), status.c_str());
  }
  if (!fs::exists(checksums_path)) {
    std::printf("note: no %s; record the digests above to pin the dataset\n", checksums_path.c_str());
  }
  return all_ok ? 0 : 1;
}

int cmd_train_stdp(const CommonOpts& opts) {
  exp::ExperimentConfig cfg = build_config(opts);
  cfg.encoding = exp::EncodingMethod::Classifier;
  cfg.train_encoders = true;
  const auto images = load_idx(cfg.image_path(), cfg.label_path());
  for (const std::uint64_t seed : cfg.seeds) {
    const auto subset = build_subset(images, cfg.per_class, seed);
    const auto enc = exp::build_encodings(cfg, subset, seed);
    const auto sep = cosine_separability(enc, derive_seed(seed, 0x5E7));
    std::printf("seed %llu: encoded %zu images, cosine separability %.4f (within %.4f between %.4f)\n",
                (unsigned long long)seed, enc.size(), sep.gap(), sep.within_mean, sep.between_mean);
  }
  return 0;
}

int cmd_train_autoencoder(const CommonOpts& opts) {
  exp::ExperimentConfig cfg = build_config(opts);
  cfg.encoding = exp::EncodingMethod::Autoencoder;
  cfg.train_encoders = true;
  const auto images = load_idx(cfg.image_path(), cfg.label_path());
  for (const std::uint64_t seed : cfg.seeds) {
    const auto subset = build_subset(images, cfg.per_class, seed);
    const auto enc = exp::build_encodings(cfg, subset, seed);
    const auto sep = cosine_separability(enc, derive_seed(seed, 0x5E7));
    std::printf("seed %llu: encoded %zu images, cosine separability %.4f\n",
                (unsigned long long)seed, enc.size(), sep.gap());
  }
  return 0;
}

int cmd_encode(const CommonOpts& opts) {
  const exp::ExperimentConfig cfg = build_config(opts);
  const auto images = load_idx(cfg.image_path(), cfg.label_path());
  for (const std::uint64_t seed : cfg.seeds) {
    const auto subset = build_subset(images, cfg.per_class, seed);
    const auto enc = exp::build_encodings(cfg, subset, seed);
    const std::string path = cfg.out_dir + "/" + cfg.row_tag() + "_seed" + std::to_string(seed) +
                             "_encodings.tsv";
    fs::create_directories(cfg.out_dir);
    dump_encodings(enc, path);
    std::printf("wrote %s (%zu rows, dim %d)\n", path.c_str(), enc.size(), enc.dim);
  }
  return 0;
}

int cmd_train_cpc(const CommonOpts& opts) {
  const exp::ExperimentConfig cfg = build_config(opts);
  const auto summary = exp::run_experiment(cfg);
  std::printf("%s / %s: max val accuracy %.4f +/- %.4f, stopping epoch %.2f +/- %.2f\n",
              summary.dataset.c_str(), summary.encoding.c_str(), summary.accuracy_mean,
              summary.accuracy_std, summary.epoch_mean, summary.epoch_std);
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& model_path, int n_pairs,
                 std::uint64_t pair_seed) {
  const exp::ExperimentConfig cfg = build_config(opts);
  const std::uint64_t seed = cfg.seeds.at(0);
  const auto images = load_idx(cfg.image_path(), cfg.label_path());
  const auto subset = build_subset(images, cfg.per_class, seed);
  const auto enc = exp::build_encodings(cfg, subset, seed);

  std::string path = model_path;
  if (path.empty()) {
    path = cfg.out_dir + "/" + cfg.row_tag() + "/seed" + std::to_string(seed) + "/cpc.ckpt";
  }
  if (!fs::exists(path)) {
    std::fprintf(stderr, "missing CPC checkpoint %s; run `spikecpc train-cpc` first\n", path.c_str());
    return 1;
  }
  cpc::CpcConfig mc;
  mc.input_dim = enc.dim;
  mc.hidden_dim = cfg.cpc_hidden;
  mc.gain_init = cfg.cpc_gain_init;
  cpc::CpcModel<float> model(mc, 0);
  model.load(path);

  PairSampler sampler(subset, cfg.wrap);
  Rng rng(pair_seed);
  const auto pairs = sampler.generate(n_pairs / 2, n_pairs - n_pairs / 2, rng);
  const auto result = cpc::evaluate(model, enc, pairs);
  std::printf("%s on %d fresh pairs: accuracy %.4f, mean BCE %.4f\n", path.c_str(),
              int(pairs.size()), result.accuracy, result.mean_loss);
  return 0;
}

int cmd_reproduce_table1(const CommonOpts& opts, const std::string& rows_arg) {
  const exp::ExperimentConfig cfg = build_config(opts);
  std::vector<int> rows;
  if (!rows_arg.empty()) {
    std::stringstream ss(rows_arg);
    std::string item;
    while (std::getline(ss, item, ',')) rows.push_back(std::stoi(item));
  }
  const auto result = exp::reproduce_table1(cfg, rows);
  std::printf("\n%s", result.formatted.c_str());
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/table1.txt");
  out << result.formatted;
  return 0;
}

int cmd_gradcheck() {
  const auto reports = gradcheck_all();
  print_gradcheck_table(reports);
  for (const auto& r : reports) {
    if (!r.pass) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive predictive coding over spiking-network encodings"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string model_path, rows_arg;
  int eval_pairs = 200;
  std::uint64_t eval_pair_seed = 999;

  add_common(app.add_subcommand("fetch-data", "verify the local MNIST IDX files"), opts);
  add_common(app.add_subcommand("train-stdp", "train the STDP classifier-encoder"), opts);
  add_common(app.add_subcommand("train-autoencoder", "train the LIF convolutional autoencoder"),
             opts);
  add_common(app.add_subcommand("encode", "encode a subset and dump the vectors"), opts);
  add_common(app.add_subcommand("train-cpc", "train the CPC head for one configuration"), opts);
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a trained CPC checkpoint on fresh pairs");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("--model", model_path, "CPC checkpoint path");
  eval_cmd->add_option("--pairs", eval_pairs, "number of evaluation pairs");
  eval_cmd->add_option("--pair-seed", eval_pair_seed, "seed for the evaluation pairs");
  auto* table_cmd = app.add_subcommand("reproduce-table1", "run the result-table configurations");
  add_common(table_cmd, opts);
  table_cmd->add_option("--rows", rows_arg, "comma-separated 1-based row numbers (default all)");
  app.add_subcommand("gradcheck", "run every registered gradient/property check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("fetch-data")) return cmd_fetch_data(opts);
    if (app.got_subcommand("train-stdp")) return cmd_train_stdp(opts);
    if (app.got_subcommand("train-autoencoder")) return cmd_train_autoencoder(opts);
    if (app.got_subcommand("encode")) return cmd_encode(opts);
    if (app.got_subcommand("train-cpc")) return cmd_train_cpc(opts);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(opts, model_path, eval_pairs, eval_pair_seed);
    if (app.got_subcommand("reproduce-table1")) return cmd_reproduce_table1(opts, rows_arg);
    if (app.got_subcommand("gradcheck")) return cmd_gradcheck();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
