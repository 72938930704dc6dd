#include "spikecpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spikecpc/errors.hpp"

namespace spikecpc {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_accuracy_svg(const std::string& path, const std::string& title,
                        const std::vector<std::vector<double>>& per_seed_val_acc) {
  if (per_seed_val_acc.empty()) throw CapacityError("write_accuracy_svg: no runs");
  std::size_t max_len = 0, min_len = SIZE_MAX;
  for (const auto& run : per_seed_val_acc) {
    max_len = std::max(max_len, run.size());
    min_len = std::min(min_len, run.size());
  }
  if (max_len == 0) throw CapacityError("write_accuracy_svg: empty runs");

  // Per-epoch mean over runs still alive; std only over the common range.
  std::vector<double> mean(max_len), lo(min_len), hi(min_len);
  for (std::size_t e = 0; e < max_len; ++e) {
    double sum = 0;
    int alive = 0;
    for (const auto& run : per_seed_val_acc) {
      if (e < run.size()) {
        sum += run[e];
        ++alive;
      }
    }
    mean[e] = sum / alive;
    if (e < min_len && per_seed_val_acc.size() > 1) {
      double sq = 0;
      for (const auto& run : per_seed_val_acc) sq += (run[e] - mean[e]) * (run[e] - mean[e]);
      const double sd = std::sqrt(sq / double(per_seed_val_acc.size() - 1));
      lo[e] = mean[e] - sd;
      hi[e] = mean[e] + sd;
    } else if (e < min_len) {
      lo[e] = hi[e] = mean[e];
    }
  }

  double y_min = 1.0, y_max = 0.0;
  for (const auto& run : per_seed_val_acc) {
    for (double v : run) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  y_min = std::max(0.0, std::floor((y_min - 0.05) * 10.0) / 10.0);
  y_max = std::min(1.0, std::ceil((y_max + 0.05) * 10.0) / 10.0);
  if (y_max - y_min < 0.1) y_max = std::min(1.0, y_min + 0.1);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto x_of = [&](std::size_t e) {
    return kLeft + (max_len == 1 ? 0.0 : plot_w * double(e) / double(max_len - 1));
  };
  auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"15\">" << title << "</text>\n";

  // gridlines + y labels
  for (double v = y_min; v <= y_max + 1e-9; v += (y_max - y_min) / 5.0) {
    const double y = y_of(v);
    out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << y << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
        << "</text>\n";
  }
  // x labels (epochs, 1-based)
  const int x_ticks = std::min<std::size_t>(8, max_len);
  for (int i = 0; i < x_ticks; ++i) {
    const std::size_t e = max_len <= 1 ? 0 : std::size_t(std::round(double(i) * (max_len - 1) / std::max(1, x_ticks - 1)));
    out << "<text x=\"" << x_of(e) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << (e + 1)
        << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";
  out << "<text transform=\"translate(16," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << "validation accuracy</text>\n";

  // +/- std band over the common epoch range (truncated if runs ended early)
  if (min_len > 1) {
    out << "<polygon fill=\"#4477aa\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t e = 0; e < min_len; ++e) out << x_of(e) << "," << y_of(std::min(1.0, hi[e])) << " ";
    for (std::size_t e = min_len; e-- > 0;) out << x_of(e) << "," << y_of(std::max(0.0, lo[e])) << " ";
    out << "\"/>\n";
  }
  // mean line
  out << "<polyline fill=\"none\" stroke=\"#4477aa\" stroke-width=\"2\" points=\"";
  for (std::size_t e = 0; e < max_len; ++e) out << x_of(e) << "," << y_of(mean[e]) << " ";
  out << "\"/>\n";

  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  out << "</svg>\n";
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spikecpc
