#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spikecpc/errors.hpp"

namespace spikecpc {

/// Named parameter registry with flat storage. One contiguous value array and
/// a mirrored gradient array, so the optimizer, the gradient checker and the
/// checkpoint writer all see the same layout. Register every entry before
/// taking spans.
template <typename T>
class ParamBlock {
 public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  void add(const std::string& name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    entries_.push_back({name, std::move(shape), data_.size(), n});
    data_.resize(data_.size() + n, T(0));
  }

  void finalize() { grad_.assign(data_.size(), T(0)); }

  std::span<T> values(const std::string& name) {
    const Entry& e = find(name);
    return {data_.data() + e.offset, e.size};
  }
  std::span<T> grads(const std::string& name) {
    const Entry& e = find(name);
    return {grad_.data() + e.offset, e.size};
  }
  std::span<const T> values(const std::string& name) const {
    const Entry& e = find(name);
    return {data_.data() + e.offset, e.size};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::span<T> grad() { return grad_; }
  std::span<const T> grad() const { return grad_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad() { std::fill(grad_.begin(), grad_.end(), T(0)); }

  const Entry& find(const std::string& name) const {
    for (const Entry& e : entries_) {
      if (e.name == name) return e;
    }
    throw ConfigError("unknown parameter entry: " + name);
  }

 private:
  std::vector<Entry> entries_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

}  // namespace spikecpc
