#include "spikecpc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spikecpc/errors.hpp"
#include "spikecpc/pairs.hpp"
#include "spikecpc/svg.hpp"

namespace spikecpc::exp {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(EncodingMethod m) {
  switch (m) {
    case EncodingMethod::Autoencoder: return "autoencoder";
    case EncodingMethod::Classifier: return "classifier";
    case EncodingMethod::Random: return "random";
  }
  return "?";
}

EncodingMethod encoding_from_string(const std::string& name) {
  if (name == "autoencoder") return EncodingMethod::Autoencoder;
  if (name == "classifier") return EncodingMethod::Classifier;
  if (name == "random") return EncodingMethod::Random;
  throw ConfigError("unknown encoding '" + name + "' (expected autoencoder|classifier|random)");
}

ExperimentConfig config_from(RunConfig& rc) {
  ExperimentConfig cfg;
  const long dataset = rc.get_int("dataset", 2500);
  if (dataset != 2500 && dataset != 5000) {
    throw ConfigError("dataset must be 2500 or 5000, got " + std::to_string(dataset));
  }
  cfg.per_class = int(dataset / 10);
  cfg.encoding = encoding_from_string(rc.get_string("encoding", "autoencoder"));
  cfg.seeds = rc.get_u64_list("seeds", {1, 2, 3});
  cfg.data_dir = rc.get_string("data.dir", cfg.data_dir);
  cfg.images_file = rc.get_string("data.images", cfg.images_file);
  cfg.labels_file = rc.get_string("data.labels", cfg.labels_file);
  cfg.out_dir = rc.get_string("out.dir", cfg.out_dir);
  cfg.train_encoders = rc.get_bool("train_encoders", cfg.train_encoders);
  cfg.quiet = rc.get_bool("quiet", cfg.quiet);

  cfg.val_fraction = rc.get_double("pairs.val_fraction", cfg.val_fraction);
  cfg.wrap = rc.get_bool("pairs.wrap", cfg.wrap);

  cfg.codec.k = rc.get_double("codec.k", cfg.codec.k);
  cfg.codec.delta_k = rc.get_double("codec.delta_k", cfg.codec.delta_k);
  cfg.codec.s_min = int(rc.get_int("codec.s_min", cfg.codec.s_min));
  cfg.codec.delta_t = rc.get_double("codec.delta_t", cfg.codec.delta_t);
  cfg.codec.dt = rc.get_double("codec.dt", cfg.codec.dt);
  cfg.codec.retry_cap = int(rc.get_int("codec.retry_cap", cfg.codec.retry_cap));

  cfg.stdp.input_gain = rc.get_double("stdp.input_gain", cfg.stdp.input_gain);
  cfg.stdp.w_exc_inh = rc.get_double("stdp.w_exc_inh", cfg.stdp.w_exc_inh);
  cfg.stdp.w_inh_exc = rc.get_double("stdp.w_inh_exc", cfg.stdp.w_inh_exc);
  cfg.stdp.eta_post = rc.get_double("stdp.eta_post", cfg.stdp.eta_post);
  cfg.stdp.eta_pre = rc.get_double("stdp.eta_pre", cfg.stdp.eta_pre);
  cfg.stdp.theta_plus = rc.get_double("stdp.theta_plus", cfg.stdp.theta_plus);
  cfg.stdp.norm_column_sum = rc.get_double("stdp.norm_column_sum", cfg.stdp.norm_column_sum);
  cfg.stdp_epochs = int(rc.get_int("stdp.epochs", cfg.stdp_epochs));

  cfg.ae.beta = rc.get_double("ae.beta", cfg.ae.beta);
  cfg.ae.v_thresh = rc.get_double("ae.v_thresh", cfg.ae.v_thresh);
  cfg.ae.t_steps = int(rc.get_int("ae.t_steps", cfg.ae.t_steps));
  cfg.ae.surrogate_alpha = rc.get_double("ae.surrogate_alpha", cfg.ae.surrogate_alpha);
  cfg.ae_learning_rate = rc.get_double("ae.learning_rate", cfg.ae_learning_rate);
  cfg.ae_epochs = int(rc.get_int("ae.epochs", cfg.ae_epochs));
  cfg.ae_batch = int(rc.get_int("ae.batch", cfg.ae_batch));

  cfg.schedule.learning_rate = rc.get_double("cpc.learning_rate", cfg.schedule.learning_rate);
  cfg.schedule.pos_per_batch = int(rc.get_int("cpc.pos_per_batch", cfg.schedule.pos_per_batch));
  cfg.schedule.neg_per_batch = int(rc.get_int("cpc.neg_per_batch", cfg.schedule.neg_per_batch));
  cfg.schedule.val_pos_per_batch =
      int(rc.get_int("cpc.val_pos_per_batch", cfg.schedule.val_pos_per_batch));
  cfg.schedule.val_neg_per_batch =
      int(rc.get_int("cpc.val_neg_per_batch", cfg.schedule.val_neg_per_batch));
  cfg.schedule.max_epochs = int(rc.get_int("cpc.max_epochs", cfg.schedule.max_epochs));
  cfg.schedule.early_stop_patience =
      int(rc.get_int("cpc.early_stop_patience", cfg.schedule.early_stop_patience));
  cfg.schedule.lr_halving_patience =
      int(rc.get_int("cpc.lr_halving_patience", cfg.schedule.lr_halving_patience));
  cfg.schedule.train_batches_per_epoch =
      int(rc.get_int("cpc.train_batches_per_epoch", cfg.schedule.train_batches_per_epoch));
  cfg.schedule.val_batches = int(rc.get_int("cpc.val_batches", cfg.schedule.val_batches));
  cfg.cpc_hidden = int(rc.get_int("cpc.hidden", cfg.cpc_hidden));
  cfg.cpc_gain_init = rc.get_double("cpc.gain_init", cfg.cpc_gain_init);
  cfg.random_dim = int(rc.get_int("random.dim", cfg.random_dim));

  cfg.config_echo = rc.echo();
  return cfg;
}

namespace {

void log(const ExperimentConfig& cfg, const std::string& msg) {
  if (!cfg.quiet) {
    std::printf("%s\n", msg.c_str());
    std::fflush(stdout);
  }
}

std::string encoder_ckpt_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::string stem = cfg.encoding == EncodingMethod::Classifier ? "stdp" : "ae";
  return cfg.out_dir + "/encoders/" + stem + "_" + std::to_string(cfg.per_class * 10) + "_seed" +
         std::to_string(seed) + ".ckpt";
}

EncodingSet<float> encode_with_stdp(const ExperimentConfig& cfg, StdpNetwork& net,
                                    const ClassBalancedSubset& subset, std::uint64_t seed) {
  EncodingSet<float> set;
  set.dim = cfg.stdp.n_exc;
  set.vectors.resize(subset.images.size());
  set.labels.resize(subset.images.size());
  set.image_indices.resize(subset.images.size());
  for (std::size_t i = 0; i < subset.images.size(); ++i) {
    const Encoding400 enc = encode_image(net, subset.images[i], cfg.codec, derive_seed(seed, 0xE11C));
    auto& v = set.vectors[i];
    v.resize(set.dim);
    for (int k = 0; k < set.dim; ++k) v[k] = float(enc.counts[k]);
    set.labels[i] = subset.images[i].label;
    set.image_indices[i] = subset.images[i].index;
  }
  return set;
}

EncodingSet<float> encode_with_ae(const ExperimentConfig& cfg,
                                  const sae::FrozenEncoder<float>& encoder,
                                  const ClassBalancedSubset& subset) {
  EncodingSet<float> set;
  set.dim = encoder.latent_dim();
  set.vectors.resize(subset.images.size());
  set.labels.resize(subset.images.size());
  set.image_indices.resize(subset.images.size());
  for (std::size_t i = 0; i < subset.images.size(); ++i) {
    const sae::LatentVector latent = encoder.encode(subset.images[i]);
    auto& v = set.vectors[i];
    v.assign(latent.values.begin(), latent.values.end());
    set.labels[i] = subset.images[i].label;
    set.image_indices[i] = subset.images[i].index;
  }
  return set;
}

}  // namespace

EncodingSet<float> build_encodings(const ExperimentConfig& cfg, const ClassBalancedSubset& subset,
                                   std::uint64_t seed) {
  switch (cfg.encoding) {
    case EncodingMethod::Random:
      return random_encoding<float>(subset, cfg.random_dim, derive_seed(seed, 0x5EED));
    case EncodingMethod::Classifier: {
      const std::string ckpt = encoder_ckpt_path(cfg, seed);
      StdpNetwork net(cfg.stdp, derive_seed(seed, 0x57D7));
      if (fs::exists(ckpt)) {
        log(cfg, "loading stdp encoder " + ckpt);
        net = StdpNetwork::load(ckpt, cfg.stdp);
      } else if (!cfg.train_encoders) {
        throw IoError("missing encoder checkpoint " + ckpt +
                      "; run `spikecpc train-stdp` first or pass --train-encoders");
      } else {
        log(cfg, "training stdp encoder (" + std::to_string(subset.images.size()) + " images)");
        StdpTrainOptions opts;
        opts.epochs = cfg.stdp_epochs;
        opts.codec = cfg.codec;
        if (!cfg.quiet) {
          opts.progress = [&cfg](int epoch, int done, int total) {
            std::printf("  stdp epoch %d: %d/%d presentations\n", epoch + 1, done, total);
            std::fflush(stdout);
          };
        }
        train_unsupervised(net, subset, opts, seed);
        fs::create_directories(fs::path(ckpt).parent_path());
        net.save(ckpt);
      }
      return encode_with_stdp(cfg, net, subset, seed);
    }
    case EncodingMethod::Autoencoder: {
      const std::string ckpt = encoder_ckpt_path(cfg, seed);
      sae::SpikingAutoencoder<float> model(cfg.ae, derive_seed(seed, 0xAE0));
      if (fs::exists(ckpt)) {
        log(cfg, "loading autoencoder " + ckpt);
        model.load(ckpt);
      } else if (!cfg.train_encoders) {
        throw IoError("missing encoder checkpoint " + ckpt +
                      "; run `spikecpc train-autoencoder` first or pass --train-encoders");
      } else {
        log(cfg, "training autoencoder (" + std::to_string(cfg.ae_epochs) + " epochs)");
        sae::AeTrainOptions opts;
        opts.learning_rate = cfg.ae_learning_rate;
        opts.epochs = cfg.ae_epochs;
        opts.batch_size = cfg.ae_batch;
        if (!cfg.quiet) {
          opts.on_epoch = [](int epoch, double loss) {
            std::printf("  ae epoch %d: mse %.6f\n", epoch + 1, loss);
            std::fflush(stdout);
          };
        }
        train_reconstruction(model, subset, opts, seed);
        fs::create_directories(fs::path(ckpt).parent_path());
        model.save(ckpt);
      }
      sae::FrozenEncoder<float> frozen(model);
      return encode_with_ae(cfg, frozen, subset);
    }
  }
  throw ConfigError("unreachable encoding method");
}

SeedRunResult run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  log(cfg, "[" + cfg.row_tag() + " seed " + std::to_string(seed) + "] loading data");
  const auto images = load_idx(cfg.image_path(), cfg.label_path());
  const auto subset = build_subset(images, cfg.per_class, seed);

  const EncodingSet<float> enc = build_encodings(cfg, subset, seed);

  std::vector<int> train_pos, val_pos;
  split_positions(subset, cfg.val_fraction, train_pos, val_pos);
  PairSampler train_sampler(subset, train_pos, cfg.wrap);
  PairSampler val_sampler(subset, val_pos, cfg.wrap);

  Rng val_rng(derive_seed(seed, 0x7A15));
  const auto val_pairs =
      val_sampler.generate(cfg.schedule.val_batches * cfg.schedule.val_pos_per_batch,
                           cfg.schedule.val_batches * cfg.schedule.val_neg_per_batch, val_rng);

  cpc::CpcConfig mc;
  mc.input_dim = enc.dim;
  mc.hidden_dim = cfg.cpc_hidden;
  mc.gain_init = cfg.cpc_gain_init;
  cpc::CpcModel<float> model(mc, derive_seed(seed, 0xC9C));

  // Standardization statistics from the training-slice encodings.
  std::vector<float> mean(enc.dim, 0.0f), stddev(enc.dim, 0.0f);
  for (int pos : train_pos) {
    for (int k = 0; k < enc.dim; ++k) mean[k] += enc.vectors[pos][k];
  }
  for (auto& m : mean) m /= float(train_pos.size());
  for (int pos : train_pos) {
    for (int k = 0; k < enc.dim; ++k) {
      const float d = enc.vectors[pos][k] - mean[k];
      stddev[k] += d * d;
    }
  }
  for (auto& s : stddev) s = std::max(1e-6f, std::sqrt(s / float(train_pos.size())));
  model.set_standardization(mean, stddev);

  cpc::TrainCallbacks callbacks;
  if (!cfg.quiet) {
    callbacks.on_epoch = [](const cpc::EpochMetrics& m) {
      std::printf("  epoch %3d: train loss %.4f acc %.4f | val loss %.4f acc %.4f | lr %.2e\n",
                  m.epoch, m.train_loss, m.train_acc, m.val_loss, m.val_acc, m.learning_rate);
      std::fflush(stdout);
    };
  }
  const cpc::TrainResult tr =
      cpc::train(model, enc, train_sampler, val_pairs, cfg.schedule, seed, callbacks);

  const std::string seed_dir = cfg.out_dir + "/" + cfg.row_tag() + "/seed" + std::to_string(seed);
  fs::create_directories(seed_dir);
  cpc::write_metrics_csv(tr.metrics, seed_dir + "/metrics.csv");
  model.save(seed_dir + "/cpc.ckpt");

  SeedRunResult result;
  result.seed = seed;
  result.max_val_accuracy = tr.max_val_accuracy;
  result.best_epoch = tr.best_epoch;
  result.stopping_epoch = tr.stopping_epoch;
  result.metrics = tr.metrics;
  return result;
}

namespace {

void aggregate(RunSummary& summary) {
  const std::size_t n = summary.runs.size();
  double acc_sum = 0, epoch_sum = 0;
  for (const auto& r : summary.runs) {
    acc_sum += r.max_val_accuracy;
    epoch_sum += double(r.stopping_epoch);
  }
  summary.accuracy_mean = acc_sum / double(n);
  summary.epoch_mean = epoch_sum / double(n);
  if (n > 1) {
    double acc_sq = 0, epoch_sq = 0;
    for (const auto& r : summary.runs) {
      acc_sq += (r.max_val_accuracy - summary.accuracy_mean) *
                (r.max_val_accuracy - summary.accuracy_mean);
      epoch_sq += (double(r.stopping_epoch) - summary.epoch_mean) *
                  (double(r.stopping_epoch) - summary.epoch_mean);
    }
    summary.accuracy_std = std::sqrt(acc_sq / double(n - 1));
    summary.epoch_std = std::sqrt(epoch_sq / double(n - 1));
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
  RunSummary summary;
  summary.dataset = cfg.dataset_name();
  summary.encoding = to_string(cfg.encoding);
  for (const std::uint64_t seed : cfg.seeds) {
    summary.runs.push_back(run_single_seed(cfg, seed));
  }
  aggregate(summary);

  const std::string row_dir = cfg.out_dir + "/" + cfg.row_tag();
  fs::create_directories(row_dir);
  write_summary_json(cfg, summary, row_dir + "/summary.json");
  std::vector<std::vector<double>> curves;
  for (const auto& r : summary.runs) {
    std::vector<double> acc;
    for (const auto& m : r.metrics) acc.push_back(m.val_acc);
    curves.push_back(std::move(acc));
  }
  write_accuracy_svg(row_dir + "/curves.svg",
                     summary.dataset + " / " + summary.encoding + " encoding", curves);
  log(cfg, "[" + cfg.row_tag() + "] max val accuracy mean " +
               std::to_string(summary.accuracy_mean) + " (std " +
               std::to_string(summary.accuracy_std) + ")");
  return summary;
}

void write_summary_json(const ExperimentConfig& cfg, const RunSummary& summary,
                        const std::string& path) {
  json j;
  char stamp[64];
  const std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["header"]["generated_at"] = stamp;  // the only non-deterministic field
  json cfg_echo = json::object();
  for (const auto& [k, v] : cfg.config_echo) cfg_echo[k] = v;
  j["config"] = cfg_echo;
  j["dataset"] = summary.dataset;
  j["encoding"] = summary.encoding;
  j["runs"] = json::array();
  for (const auto& r : summary.runs) {
    j["runs"].push_back({{"seed", r.seed},
                         {"max_val_accuracy", r.max_val_accuracy},
                         {"best_epoch", r.best_epoch},
                         {"stopping_epoch", r.stopping_epoch}});
  }
  j["aggregate"] = {{"accuracy_mean", summary.accuracy_mean},
                    {"accuracy_std", summary.accuracy_std},
                    {"epoch_mean", summary.epoch_mean},
                    {"epoch_std", summary.epoch_std}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << j.dump(2) << "\n";
}

std::vector<Table1Row> table1_rows() {
  return {{1, 250, EncodingMethod::Autoencoder},
          {2, 500, EncodingMethod::Autoencoder},
          {3, 250, EncodingMethod::Classifier},
          {4, 500, EncodingMethod::Classifier},
          {5, 250, EncodingMethod::Random}};
}

std::string format_table1(const std::vector<Table1Row>& rows,
                          const std::vector<RunSummary>& summaries, bool* ordering_pass,
                          bool* bands_pass) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-16s %-26s %-20s %s\n", "Dataset", "Encoding",
                "Max Validation Accuracy", "Epoch", "Band");
  out += line;
  out += std::string(86, '-') + "\n";

  double acc_2500[3] = {-1, -1, -1};  // autoencoder, classifier, random
  bool bands_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto& s = summaries[i];
    std::string band = "-";
    if (row.per_class == 250) {
      switch (row.encoding) {
        case EncodingMethod::Autoencoder:
          acc_2500[0] = s.accuracy_mean;
          band = s.accuracy_mean >= 0.90 ? "pass (>=0.90)" : "FAIL (>=0.90)";
          if (s.accuracy_mean < 0.90) bands_ok = false;
          break;
        case EncodingMethod::Classifier:
          acc_2500[1] = s.accuracy_mean;
          band = s.accuracy_mean >= 0.70 ? "pass (>=0.70)" : "FAIL (>=0.70)";
          if (s.accuracy_mean < 0.70) bands_ok = false;
          break;
        case EncodingMethod::Random:
          acc_2500[2] = s.accuracy_mean;
          band = (s.accuracy_mean >= 0.45 && s.accuracy_mean <= 0.65) ? "pass (0.45..0.65)"
                                                                      : "FAIL (0.45..0.65)";
          if (s.accuracy_mean < 0.45 || s.accuracy_mean > 0.65) bands_ok = false;
          break;
      }
    }
    char acc_buf[48], epoch_buf[48];
    std::snprintf(acc_buf, sizeof acc_buf, "%.4f +/- %.4f", s.accuracy_mean, s.accuracy_std);
    std::snprintf(epoch_buf, sizeof epoch_buf, "%.2f +/- %.2f", s.epoch_mean, s.epoch_std);
    std::snprintf(line, sizeof line, "%-12s %-16s %-26s %-20s %s\n", s.dataset.c_str(),
                  s.encoding.c_str(), acc_buf, epoch_buf, band.c_str());
    out += line;
  }

  bool ordering = false;
  if (acc_2500[0] >= 0 && acc_2500[1] >= 0 && acc_2500[2] >= 0) {
    ordering = acc_2500[0] - acc_2500[1] >= 0.05 && acc_2500[1] - acc_2500[2] >= 0.05;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "MNIST-2500 ordering autoencoder > classifier > random (gaps %.4f, %.4f): %s\n",
                  acc_2500[0] - acc_2500[1], acc_2500[1] - acc_2500[2],
                  ordering ? "pass" : "FAIL");
    out += buf;
  }
  if (ordering_pass) *ordering_pass = ordering;
  if (bands_pass) *bands_pass = bands_ok;
  return out;
}

Table1Result reproduce_table1(const ExperimentConfig& base, const std::vector<int>& only_rows) {
  Table1Result result;
  for (const auto& row : table1_rows()) {
    if (!only_rows.empty() &&
        std::find(only_rows.begin(), only_rows.end(), row.number) == only_rows.end()) {
      continue;
    }
    ExperimentConfig cfg = base;
    cfg.per_class = row.per_class;
    cfg.encoding = row.encoding;
    result.rows.push_back(row);
    result.summaries.push_back(run_experiment(cfg));
  }
  result.formatted = format_table1(result.rows, result.summaries, &result.ordering_pass_2500,
                                   &result.bands_pass);
  return result;
}

}  // namespace spikecpc::exp
