#include "spikecpc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "spikecpc/errors.hpp"

namespace spikecpc {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'K', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated checkpoint " + path);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated checkpoint " + path);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create checkpoint " + path);
  out.write(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (int d : e.shape) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& e : entries) {
    std::size_t n = 1;
    for (int d : e.shape) n *= static_cast<std::size_t>(d);
    if (n != e.data.size()) throw ShapeError("checkpoint entry " + e.name + ": shape/data mismatch");
    for (double v : e.data) put_f64(out, v);
  }
  if (!out) throw IoError("failed writing checkpoint " + path);
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("not a checkpoint file: " + path);
  }
  const std::uint32_t count = get_u32(in, path);
  std::vector<CheckpointEntry> entries(count);
  for (auto& e : entries) {
    const std::uint32_t name_len = get_u32(in, path);
    e.name.resize(name_len);
    if (!in.read(e.name.data(), name_len)) throw IoError("truncated checkpoint " + path);
    const std::uint32_t ndims = get_u32(in, path);
    e.shape.resize(ndims);
    for (auto& d : e.shape) d = static_cast<int>(get_u32(in, path));
  }
  for (auto& e : entries) {
    std::size_t n = 1;
    for (int d : e.shape) n *= static_cast<std::size_t>(d);
    e.data.resize(n);
    for (auto& v : e.data) v = get_f64(in, path);
  }
  return entries;
}

const CheckpointEntry& checkpoint_entry(const std::vector<CheckpointEntry>& entries,
                                        const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw IoError("checkpoint entry not found: " + name);
}

}  // namespace spikecpc
