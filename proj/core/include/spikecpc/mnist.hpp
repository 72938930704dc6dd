#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace spikecpc {

constexpr int kImageSide = 28;
constexpr int kImagePixels = kImageSide * kImageSide;
constexpr int kNumClasses = 10;

/// One 28x28 grayscale digit. Pixels are raw bytes divided by 255.
struct MnistImage {
  std::array<float, kImagePixels> pixels;
  int label = 0;
  // Ordinal of the image within its source IDX file; stable identifier
  // used to key derived per-image data (encodings, seeds).
  int index = 0;
};

/// Reads a canonical IDX image/label file pair.
/// Image files start with big-endian magic 2051, label files with 2049.
/// Throws FormatError on bad magic, ConsistencyError on count mismatch and
/// IoError on truncated payloads.
std::vector<MnistImage> load_idx(const std::string& image_path, const std::string& label_path);

/// Writes images back out as an IDX pair (bit-exact container: big-endian
/// magic and dimension sizes, row-major unsigned bytes).
void write_idx(const std::vector<MnistImage>& images, const std::string& image_path,
               const std::string& label_path);

}  // namespace spikecpc
