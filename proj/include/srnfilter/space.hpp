#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "srnfilter/model.hpp"

namespace srnfilter {

inline constexpr std::size_t kDefaultSizeCap = 50'000'000;

/// Box [lower, upper] of integer states with a row-major bijection to
/// 0..size()-1 (first coordinate slowest).
class TruncatedSpace {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  TruncatedSpace() = default;
  TruncatedSpace(std::vector<int> lower, std::vector<int> upper,
                 std::size_t size_cap = kDefaultSizeCap);

  /// Number of states of the box without allocating it; saturates at
  /// SIZE_MAX.
  static std::size_t count(std::span<const int> lower, std::span<const int> upper);

  std::size_t dims() const { return lower_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<int>& lower() const { return lower_; }
  const std::vector<int>& upper() const { return upper_; }

  bool contains(std::span<const int> x) const;
  /// Flat index of x, or npos when x lies outside the box.
  std::size_t index_of(std::span<const int> x) const;
  void state(std::size_t index, std::span<int> out) const;
  State state(std::size_t index) const;

 private:
  std::vector<int> lower_;
  std::vector<int> upper_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

/// Builds the box; throws SizeCap when it holds more than `size_cap` states.
TruncatedSpace enumerate_space(std::vector<int> lower, std::vector<int> upper,
                               std::size_t size_cap = kDefaultSizeCap);

}  // namespace srnfilter
