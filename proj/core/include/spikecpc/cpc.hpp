#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "spikecpc/adam.hpp"
#include "spikecpc/checkpoint.hpp"
#include "spikecpc/encodings.hpp"
#include "spikecpc/gru.hpp"
#include "spikecpc/nn_ops.hpp"
#include "spikecpc/pairs.hpp"
#include "spikecpc/params.hpp"

namespace spikecpc::cpc {

/// Batch composition, optimizer and patience settings of one training run.
struct TrainSchedule {
  double learning_rate = 1e-4;
  int pos_per_batch = 32;
  int neg_per_batch = 32;
  int val_pos_per_batch = 10;
  int val_neg_per_batch = 10;
  int max_epochs = 100;
  int early_stop_patience = 10;  // on validation accuracy (maximize)
  int lr_halving_patience = 3;   // on validation loss (minimize)
  int repeats = 3;               // seeds per configuration
  int train_batches_per_epoch = 64;
  int val_batches = 10;

  void validate() const {
    if (pos_per_batch <= 0 || neg_per_batch <= 0 || val_pos_per_batch <= 0 ||
        val_neg_per_batch <= 0 || max_epochs <= 0 || train_batches_per_epoch <= 0 ||
        val_batches <= 0) {
      throw ConfigError("schedule: all counts must be positive");
    }
    if (early_stop_patience < 1 || lr_halving_patience < 1) {
      throw ConfigError("schedule: patience values must be >= 1");
    }
  }
};

/// Patience bookkeeping, separated from the training loop so the halving and
/// stopping rules can be unit-tested with scripted metrics. "Improvement"
/// means strictly better than the best value seen so far, at full precision.
class ScheduleController {
 public:
  explicit ScheduleController(const TrainSchedule& schedule) : schedule_(schedule) {}

  struct Decision {
    bool halve_lr = false;
    bool stop = false;
  };

  /// Feed the metrics of a finished epoch (1-based).
  Decision observe(int epoch, double val_loss, double val_acc) {
    Decision d;
    if (val_acc > best_acc_) {
      best_acc_ = val_acc;
      best_acc_epoch_ = epoch;
      acc_stall_ = 0;
    } else {
      ++acc_stall_;
    }
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      loss_stall_ = 0;
    } else {
      ++loss_stall_;
    }
    if (loss_stall_ >= schedule_.lr_halving_patience) {
      d.halve_lr = true;
      loss_stall_ = 0;
    }
    if (acc_stall_ >= schedule_.early_stop_patience) d.stop = true;
    if (epoch >= schedule_.max_epochs) d.stop = true;
    return d;
  }

  double best_acc() const { return best_acc_; }
  int best_acc_epoch() const { return best_acc_epoch_; }

 private:
  TrainSchedule schedule_;
  double best_acc_ = -1.0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  int best_acc_epoch_ = 0;
  int acc_stall_ = 0;
  int loss_stall_ = 0;
};

/// Per-sequence scores: s_t per prediction step, their mean (the raw score or
/// logit before calibration), and the calibrated sigmoid probability.
struct ScoredSequence {
  std::vector<double> s;
  double mean_score = 0.0;
  double probability = 0.0;
  int label = 0;
  bool prediction = false;  // probability > 0.5, strict
};

struct CpcConfig {
  int input_dim = 0;     // encoder output dimension d
  int hidden_dim = 256;  // GRU hidden size
  int context_len = kContextLen;
  int target_len = kTargetLen;
  double gain_init = 5.0;  // calibration gain a; bias b starts at 0
};

/// GRU context aggregator over four standardized context encodings, one dense
/// predictor per future step, cosine scoring (l2-normalized dot products,
/// Eq. 5 reconciled with the normalized-dot test rule), mean score and a
/// learnable scalar calibration (a, b) in front of the sigmoid.
template <typename T>
class CpcModel {
 public:
  CpcModel(const CpcConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.input_dim <= 0 || cfg.hidden_dim <= 0) throw ConfigError("cpc: bad dimensions");
    const int d = cfg.input_dim, h = cfg.hidden_dim;
    params_.add("gru.wz", {h, d});
    params_.add("gru.wr", {h, d});
    params_.add("gru.wh", {h, d});
    params_.add("gru.uz", {h, h});
    params_.add("gru.ur", {h, h});
    params_.add("gru.uh", {h, h});
    params_.add("gru.bz", {h});
    params_.add("gru.br", {h});
    params_.add("gru.bh", {h});
    for (int t = 0; t < cfg.target_len; ++t) {
      const std::string tag = "pred" + std::to_string(t);
      params_.add(tag + ".w", {d, h});
      params_.add(tag + ".b", {d});
    }
    params_.add("calib.a", {1});
    params_.add("calib.b", {1});
    params_.finalize();

    Rng rng(init_seed);
    for (const auto& e : params_.entries()) {
      if (e.name.ends_with(".b") || e.name.starts_with("calib")) continue;
      auto w = params_.values(e.name);
      const double limit = 1.0 / std::sqrt(double(e.shape.back()));
      for (auto& x : w) x = T(rng.uniform_range(-limit, limit));
    }
    params_.values("calib.a")[0] = T(cfg.gain_init);
    enc_mean_.assign(d, T(0));
    enc_std_.assign(d, T(1));
  }

  const CpcConfig& config() const { return cfg_; }
  ParamBlock<T>& block() { return params_; }
  const ParamBlock<T>& block() const { return params_; }

  /// Standardization statistics applied to every encoding entering the GRU
  /// and the scorer; computed from the training-slice encodings.
  void set_standardization(std::span<const T> mean, std::span<const T> stddev) {
    if (int(mean.size()) != cfg_.input_dim || int(stddev.size()) != cfg_.input_dim) {
      throw ShapeError("cpc: standardization dim mismatch");
    }
    enc_mean_.assign(mean.begin(), mean.end());
    enc_std_.assign(stddev.begin(), stddev.end());
  }
  std::span<const T> standardization_mean() const { return enc_mean_; }
  std::span<const T> standardization_std() const { return enc_std_; }

  void standardize(std::span<const T> raw, std::span<T> out) const {
    for (int k = 0; k < cfg_.input_dim; ++k) out[k] = (raw[k] - enc_mean_[k]) / enc_std_[k];
  }

  /// Intermediates of one sequence forward pass, kept for the backward pass.
  struct PairForward {
    std::vector<nn::GruStepCache<T>> gru_caches;
    std::vector<std::vector<T>> ctx;      // standardized context encodings
    std::vector<T> context;               // final hidden state c
    std::vector<std::vector<T>> p;        // raw predictions, target_len x d
    std::vector<std::vector<T>> y;        // standardized targets
    std::vector<double> s;                // cosine per step
    std::vector<double> p_norm, y_norm;
    double mean_score = 0.0;
    double logit = 0.0;
    int label = 0;
  };

  /// GRU over the standardized context, then one dense map per future step.
  /// Raw (un-standardized) encodings go in.
  void predict_future(const std::vector<std::span<const T>>& context_raw, PairForward& fwd) const {
    if (int(context_raw.size()) != cfg_.context_len) throw ShapeError("cpc: context length");
    const int d = cfg_.input_dim, h = cfg_.hidden_dim;
    nn::GruWeights<T> gru = gru_weights();
    fwd.gru_caches.resize(cfg_.context_len);
    fwd.ctx.assign(cfg_.context_len, std::vector<T>(d));
    std::vector<T> h_state(h, T(0)), h_next(h);
    for (int t = 0; t < cfg_.context_len; ++t) {
      standardize(context_raw[t], fwd.ctx[t]);
      nn::gru_forward<T>(gru, fwd.ctx[t], h_state, h_next, fwd.gru_caches[t]);
      h_state = h_next;
    }
    fwd.context = h_state;
    fwd.p.assign(cfg_.target_len, std::vector<T>(d));
    for (int t = 0; t < cfg_.target_len; ++t) {
      const std::string tag = "pred" + std::to_string(t);
      nn::dense_forward<T>(fwd.context, params_.values(tag + ".w"), params_.values(tag + ".b"),
                           fwd.p[t]);
    }
  }

  /// Cosine similarity per step between predictions and standardized targets,
  /// mean score and calibrated logit. Throws NumericalError on a zero-norm
  /// vector (degenerate encoding).
  void score(const std::vector<std::span<const T>>& targets_raw, PairForward& fwd) const {
    if (int(targets_raw.size()) != cfg_.target_len) throw ShapeError("cpc: target length");
    const int d = cfg_.input_dim;
    fwd.y.assign(cfg_.target_len, std::vector<T>(d));
    fwd.s.assign(cfg_.target_len, 0.0);
    fwd.p_norm.assign(cfg_.target_len, 0.0);
    fwd.y_norm.assign(cfg_.target_len, 0.0);
    double total = 0.0;
    for (int t = 0; t < cfg_.target_len; ++t) {
      standardize(targets_raw[t], fwd.y[t]);
      double pp = 0, yy = 0, py = 0;
      for (int k = 0; k < d; ++k) {
        const double pv = double(fwd.p[t][k]), yv = double(fwd.y[t][k]);
        pp += pv * pv;
        yy += yv * yv;
        py += pv * yv;
      }
      if (pp == 0.0 || yy == 0.0) throw NumericalError("cpc: zero-norm vector in score");
      fwd.p_norm[t] = std::sqrt(pp);
      fwd.y_norm[t] = std::sqrt(yy);
      fwd.s[t] = py / (fwd.p_norm[t] * fwd.y_norm[t]);
      total += fwd.s[t];
    }
    fwd.mean_score = total / double(cfg_.target_len);
    fwd.logit = calibration_a() * fwd.mean_score + calibration_b();
  }

  double calibration_a() const { return double(params_.values("calib.a")[0]); }
  double calibration_b() const { return double(params_.values("calib.b")[0]); }

  /// Full forward for one pair.
  void forward_pair(const EncodingSet<T>& enc, const SequencePair& pair, PairForward& fwd) const {
    std::vector<std::span<const T>> ctx(cfg_.context_len), tgt(cfg_.target_len);
    for (int t = 0; t < cfg_.context_len; ++t) ctx[t] = enc.vectors[pair.context_image_idx[t]];
    for (int t = 0; t < cfg_.target_len; ++t) tgt[t] = enc.vectors[pair.target_image_idx[t]];
    predict_future(ctx, fwd);
    score(tgt, fwd);
    fwd.label = pair.label;
  }

  ScoredSequence scored(const PairForward& fwd) const {
    ScoredSequence out;
    out.s = fwd.s;
    out.mean_score = fwd.mean_score;
    out.probability = nn::sigmoid(fwd.logit);
    out.label = fwd.label;
    out.prediction = out.probability > 0.5;
    return out;
  }

  /// Accumulates parameter gradients for one pair given d(loss)/d(logit).
  void backward_pair(const PairForward& fwd, double d_logit) {
    const int d = cfg_.input_dim, h = cfg_.hidden_dim;
    params_.grads("calib.a")[0] += T(d_logit * fwd.mean_score);
    params_.grads("calib.b")[0] += T(d_logit);
    const double d_mean = d_logit * calibration_a();
    const double d_s = d_mean / double(cfg_.target_len);

    std::vector<T> d_context(h, T(0));
    std::vector<T> d_p(d);
    for (int t = 0; t < cfg_.target_len; ++t) {
      // s = (p/|p|) . (y/|y|);  dp = (y_hat - s * p_hat) / |p| * ds
      for (int k = 0; k < d; ++k) {
        const double p_hat = double(fwd.p[t][k]) / fwd.p_norm[t];
        const double y_hat = double(fwd.y[t][k]) / fwd.y_norm[t];
        d_p[k] = T(d_s * (y_hat - fwd.s[t] * p_hat) / fwd.p_norm[t]);
      }
      const std::string tag = "pred" + std::to_string(t);
      nn::dense_backward<T>(fwd.context, params_.values(tag + ".w"), d_p,
                            params_.grads(tag + ".w"), params_.grads(tag + ".b"), d_context);
    }
    // BPTT through the four GRU steps.
    nn::GruWeights<T> gru = gru_weights();
    nn::GruGrads<T> grads = gru_grads();
    std::vector<T> d_h = d_context, d_h_prev(h);
    for (int t = cfg_.context_len - 1; t >= 0; --t) {
      std::fill(d_h_prev.begin(), d_h_prev.end(), T(0));
      nn::gru_backward<T>(gru, fwd.gru_caches[t], d_h, grads, d_h_prev);
      d_h = d_h_prev;
    }
  }

  void save(const std::string& path) const {
    std::vector<CheckpointEntry> entries;
    for (const auto& e : params_.entries()) {
      CheckpointEntry ce;
      ce.name = e.name;
      ce.shape = e.shape;
      auto vals = params_.values(e.name);
      ce.data.assign(vals.begin(), vals.end());
      entries.push_back(std::move(ce));
    }
    CheckpointEntry mean{"enc.mean", {cfg_.input_dim}, {enc_mean_.begin(), enc_mean_.end()}};
    CheckpointEntry stddev{"enc.std", {cfg_.input_dim}, {enc_std_.begin(), enc_std_.end()}};
    entries.push_back(std::move(mean));
    entries.push_back(std::move(stddev));
    write_checkpoint(path, entries);
  }

  void load(const std::string& path) {
    const auto entries = read_checkpoint(path);
    for (const auto& e : params_.entries()) {
      const auto& ce = checkpoint_entry(entries, e.name);
      if (ce.shape != e.shape) throw FormatError("cpc checkpoint shape mismatch: " + e.name);
      auto vals = params_.values(e.name);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = T(ce.data[i]);
    }
    const auto& mean = checkpoint_entry(entries, "enc.mean");
    const auto& stddev = checkpoint_entry(entries, "enc.std");
    enc_mean_.assign(mean.data.begin(), mean.data.end());
    enc_std_.assign(stddev.data.begin(), stddev.data.end());
  }

  nn::GruWeights<T> gru_weights() const {
    nn::GruWeights<T> w;
    w.input_dim = cfg_.input_dim;
    w.hidden_dim = cfg_.hidden_dim;
    w.wz = params_.values("gru.wz");
    w.wr = params_.values("gru.wr");
    w.wh = params_.values("gru.wh");
    w.uz = params_.values("gru.uz");
    w.ur = params_.values("gru.ur");
    w.uh = params_.values("gru.uh");
    w.bz = params_.values("gru.bz");
    w.br = params_.values("gru.br");
    w.bh = params_.values("gru.bh");
    return w;
  }

 private:
  nn::GruGrads<T> gru_grads() {
    nn::GruGrads<T> g;
    g.wz = params_.grads("gru.wz");
    g.wr = params_.grads("gru.wr");
    g.wh = params_.grads("gru.wh");
    g.uz = params_.grads("gru.uz");
    g.ur = params_.grads("gru.ur");
    g.uh = params_.grads("gru.uh");
    g.bz = params_.grads("gru.bz");
    g.br = params_.grads("gru.br");
    g.bh = params_.grads("gru.bh");
    return g;
  }

  CpcConfig cfg_;
  ParamBlock<T> params_;
  std::vector<T> enc_mean_, enc_std_;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
  double learning_rate = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Accuracy and mean BCE over a fixed pair list. Prediction is probability
/// strictly greater than 0.5.
template <typename T>
EvalResult evaluate(const CpcModel<T>& model, const EncodingSet<T>& enc,
                    const std::vector<SequencePair>& pairs) {
  if (pairs.empty()) throw CapacityError("evaluate: no pairs");
  typename CpcModel<T>::PairForward fwd;
  std::vector<T> logits(pairs.size()), labels(pairs.size()), d_logits(pairs.size());
  int correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    model.forward_pair(enc, pairs[i], fwd);
    logits[i] = T(fwd.logit);
    labels[i] = T(pairs[i].label);
    const bool predict_positive = nn::sigmoid(fwd.logit) > 0.5;
    if (predict_positive == (pairs[i].label == 1)) ++correct;
  }
  EvalResult r;
  r.mean_loss = double(nn::bce_with_logits<T>(logits, labels, d_logits));
  r.accuracy = double(correct) / double(pairs.size());
  return r;
}

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  double max_val_accuracy = 0.0;
  int best_epoch = 0;      // epoch of the accuracy maximum (1-based)
  int stopping_epoch = 0;  // last epoch that ran
};

struct TrainCallbacks {
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// One full training run: per epoch, train_batches_per_epoch batches of
/// (pos+neg) pairs generated on the fly from the train sampler, BCE descent
/// with Adam on GRU/predictors/calibration only, evaluation on the fixed
/// validation pairs, then learning-rate halving (patience on validation
/// loss) and early stopping (patience on validation accuracy).
template <typename T>
TrainResult train(CpcModel<T>& model, const EncodingSet<T>& enc, const PairSampler& train_sampler,
                  const std::vector<SequencePair>& val_pairs, const TrainSchedule& schedule,
                  std::uint64_t seed, const TrainCallbacks& callbacks = {}) {
  schedule.validate();
  if (val_pairs.empty()) throw CapacityError("train: empty validation set");
  nn::Adam<T> adam(model.block().size(), schedule.learning_rate);
  ScheduleController controller(schedule);
  TrainResult result;

  typename CpcModel<T>::PairForward fwd;
  const int pairs_per_batch = schedule.pos_per_batch + schedule.neg_per_batch;
  std::vector<typename CpcModel<T>::PairForward> batch_fwd(pairs_per_batch);

  for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    Rng epoch_rng(derive_seed(seed, 0xC0DE0000ULL + std::uint64_t(epoch)));
    const auto pool = train_sampler.generate(schedule.train_batches_per_epoch * schedule.pos_per_batch,
                                             schedule.train_batches_per_epoch * schedule.neg_per_batch,
                                             epoch_rng);
    const auto batches = make_batches(pool, schedule.pos_per_batch, schedule.neg_per_batch, epoch_rng);

    double train_loss = 0.0;
    long train_correct = 0, train_seen = 0;
    std::vector<T> logits(pairs_per_batch), labels(pairs_per_batch), d_logits(pairs_per_batch);
    for (const auto& batch : batches) {
      model.block().zero_grad();
      for (int i = 0; i < pairs_per_batch; ++i) {
        const SequencePair& pair = pool[batch[i]];
        model.forward_pair(enc, pair, batch_fwd[i]);
        logits[i] = T(batch_fwd[i].logit);
        labels[i] = T(pair.label);
        const bool predict_positive = nn::sigmoid(batch_fwd[i].logit) > 0.5;
        if (predict_positive == (pair.label == 1)) ++train_correct;
      }
      const double loss = double(nn::bce_with_logits<T>(logits, labels, d_logits));
      if (!std::isfinite(loss)) {
        throw NumericalError("cpc training diverged at epoch " + std::to_string(epoch));
      }
      for (int i = 0; i < pairs_per_batch; ++i) {
        model.backward_pair(batch_fwd[i], double(d_logits[i]));
      }
      adam.step(model.block());
      train_loss += loss;
      train_seen += pairs_per_batch;
    }

    const EvalResult val = evaluate(model, enc, val_pairs);
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = batches.empty() ? 0.0 : train_loss / double(batches.size());
    m.train_acc = train_seen ? double(train_correct) / double(train_seen) : 0.0;
    m.val_loss = val.mean_loss;
    m.val_acc = val.accuracy;
    m.learning_rate = adam.learning_rate();
    result.metrics.push_back(m);
    if (callbacks.on_epoch) callbacks.on_epoch(m);

    const auto decision = controller.observe(epoch, val.mean_loss, val.accuracy);
    result.stopping_epoch = epoch;
    if (decision.halve_lr) adam.set_learning_rate(adam.learning_rate() * 0.5);
    if (decision.stop) break;
  }
  result.max_val_accuracy = controller.best_acc();
  result.best_epoch = controller.best_acc_epoch();
  return result;
}

/// Per-epoch metrics file: epoch, split, loss, accuracy, learning_rate.
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);
std::vector<EpochMetrics> read_metrics_csv(const std::string& path);

}  // namespace spikecpc::cpc
