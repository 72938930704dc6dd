// Converts the per-digit JSON arrays of the npm `mnist` package (flat
// [n*784] intensity lists in 0.json .. 9.json) into a canonical IDX pair
// plus a checksums.txt. The JSON stores b/255 rounded to three decimals;
// round(v*255) recovers the original byte exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spikecpc/mnist.hpp"
#include "spikecpc/sha256.hpp"

namespace fs = std::filesystem;
using namespace spikecpc;

int main(int argc, char** argv) {
  CLI::App app{"Convert npm mnist-package JSON digits into IDX files"};
  std::string src_dir, out_dir = "data";
  app.add_option("--src", src_dir, "directory containing 0.json .. 9.json")->required();
  app.add_option("--out", out_dir, "output directory for the IDX files");
  CLI11_PARSE(app, argc, argv);

  std::vector<MnistImage> images;
  for (int digit = 0; digit < 10; ++digit) {
    const std::string path = src_dir + "/" + std::to_string(digit) + ".json";
    std::ifstream in(path);
    if (!in) {
      std::fprintf(stderr, "cannot open %s\n", path.c_str());
      return 1;
    }
    nlohmann::json j;
    in >> j;
    const auto& data = j.at("data");
    if (data.size() % kImagePixels != 0) {
      std::fprintf(stderr, "%s: length %zu not a multiple of 784\n", path.c_str(), data.size());
      return 1;
    }
    const std::size_t count = data.size() / kImagePixels;
    for (std::size_t n = 0; n < count; ++n) {
      MnistImage img;
      img.label = digit;
      img.index = int(images.size());
      for (int p = 0; p < kImagePixels; ++p) {
        const double v = data[n * kImagePixels + p].get<double>();
        const int byte = int(v * 255.0 + 0.5);
        img.pixels[p] = float(byte) / 255.0f;
      }
      images.push_back(img);
    }
    std::printf("digit %d: %zu images\n", digit, count);
  }

  fs::create_directories(out_dir);
  const std::string image_path = out_dir + "/train-images-idx3-ubyte";
  const std::string label_path = out_dir + "/train-labels-idx1-ubyte";
  write_idx(images, image_path, label_path);
  std::ofstream checksums(out_dir + "/checksums.txt");
  checksums << sha256_file_hex(image_path) << "  train-images-idx3-ubyte\n";
  checksums << sha256_file_hex(label_path) << "  train-labels-idx1-ubyte\n";
  std::printf("wrote %zu images to %s\n", images.size(), out_dir.c_str());
  return 0;
}
