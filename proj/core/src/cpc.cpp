#include "spikecpc/cpc.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spikecpc/errors.hpp"

namespace spikecpc::cpc {

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "epoch,split,loss,accuracy,learning_rate\n";
  char buf[96];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%d,train,%.9g,%.9g,%.9g\n", m.epoch, m.train_loss, m.train_acc,
                  m.learning_rate);
    out << buf;
    std::snprintf(buf, sizeof buf, "%d,val,%.9g,%.9g,%.9g\n", m.epoch, m.val_loss, m.val_acc,
                  m.learning_rate);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<EpochMetrics> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,split,loss,accuracy,learning_rate") {
    throw FormatError("bad metrics header in " + path);
  }
  std::vector<EpochMetrics> metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    const int epoch = std::stoi(field);
    std::string split;
    std::getline(ss, split, ',');
    double loss, acc, lr;
    std::getline(ss, field, ',');
    loss = std::stod(field);
    std::getline(ss, field, ',');
    acc = std::stod(field);
    std::getline(ss, field, ',');
    lr = std::stod(field);
    if (metrics.empty() || metrics.back().epoch != epoch) {
      metrics.push_back({});
      metrics.back().epoch = epoch;
    }
    EpochMetrics& m = metrics.back();
    if (split == "train") {
      m.train_loss = loss;
      m.train_acc = acc;
    } else if (split == "val") {
      m.val_loss = loss;
      m.val_acc = acc;
    } else {
      throw FormatError("bad split '" + split + "' in " + path);
    }
    m.learning_rate = lr;
  }
  return metrics;
}

}  // namespace spikecpc::cpc
