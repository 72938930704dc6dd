#include "spikecpc/mnist.hpp"

#include <cstdio>
#include <fstream>

#include "spikecpc/errors.hpp"

namespace spikecpc {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated IDX header in " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

std::vector<MnistImage> load_idx(const std::string& image_path, const std::string& label_path) {
  std::ifstream img(image_path, std::ios::binary);
  if (!img) throw IoError("cannot open image file " + image_path);
  std::ifstream lab(label_path, std::ios::binary);
  if (!lab) throw IoError("cannot open label file " + label_path);

  const std::uint32_t img_magic = read_be32(img, image_path);
  if (img_magic != kImageMagic) {
    throw FormatError("bad image magic " + std::to_string(img_magic) + " in " + image_path +
                      " (expected 2051)");
  }
  const std::uint32_t n_images = read_be32(img, image_path);
  const std::uint32_t rows = read_be32(img, image_path);
  const std::uint32_t cols = read_be32(img, image_path);
  if (rows != kImageSide || cols != kImageSide) {
    throw FormatError("unsupported image size " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " in " + image_path);
  }

  const std::uint32_t lab_magic = read_be32(lab, label_path);
  if (lab_magic != kLabelMagic) {
    throw FormatError("bad label magic " + std::to_string(lab_magic) + " in " + label_path +
                      " (expected 2049)");
  }
  const std::uint32_t n_labels = read_be32(lab, label_path);
  if (n_images != n_labels) {
    throw ConsistencyError("image/label count mismatch: " + std::to_string(n_images) + " vs " +
                           std::to_string(n_labels));
  }

  std::vector<MnistImage> out(n_images);
  std::vector<unsigned char> buf(kImagePixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), kImagePixels)) {
      throw IoError("truncated image payload at entry " + std::to_string(i) + " in " + image_path);
    }
    unsigned char label;
    if (!lab.read(reinterpret_cast<char*>(&label), 1)) {
      throw IoError("truncated label payload at entry " + std::to_string(i) + " in " + label_path);
    }
    if (label > 9) {
      throw FormatError("label " + std::to_string(int(label)) + " out of range at entry " +
                        std::to_string(i));
    }
    MnistImage& m = out[i];
    for (int p = 0; p < kImagePixels; ++p) m.pixels[p] = float(buf[p]) / 255.0f;
    m.label = label;
    m.index = static_cast<int>(i);
  }
  return out;
}

void write_idx(const std::vector<MnistImage>& images, const std::string& image_path,
               const std::string& label_path) {
  std::ofstream img(image_path, std::ios::binary);
  if (!img) throw IoError("cannot create " + image_path);
  std::ofstream lab(label_path, std::ios::binary);
  if (!lab) throw IoError("cannot create " + label_path);

  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(images.size()));
  write_be32(img, kImageSide);
  write_be32(img, kImageSide);
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(images.size()));

  std::vector<unsigned char> buf(kImagePixels);
  for (const MnistImage& m : images) {
    for (int p = 0; p < kImagePixels; ++p) {
      const float v = m.pixels[p] * 255.0f;
      buf[p] = static_cast<unsigned char>(v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v + 0.5f));
    }
    img.write(reinterpret_cast<const char*>(buf.data()), kImagePixels);
    const unsigned char label = static_cast<unsigned char>(m.label);
    lab.write(reinterpret_cast<const char*>(&label), 1);
  }
  if (!img || !lab) throw IoError("failed writing IDX files");
}

}  // namespace spikecpc
