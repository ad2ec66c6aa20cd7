#include "srnfilter/space.hpp"

#include <limits>

#include "srnfilter/errors.hpp"

namespace srnfilter {

std::size_t TruncatedSpace::count(std::span<const int> lower,
                                  std::span<const int> upper) {
  constexpr auto max = std::numeric_limits<std::size_t>::max();
  std::size_t n = 1;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (upper[i] < lower[i]) return 0;
    const auto width = static_cast<std::size_t>(upper[i] - lower[i]) + 1;
    if (n > max / width) return max;
    n *= width;
  }
  return n;
}

TruncatedSpace::TruncatedSpace(std::vector<int> lower, std::vector<int> upper,
                               std::size_t size_cap)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw Error(ErrorKind::BadParam, "box bounds have different dimensions");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (lower_[i] < 0 || upper_[i] < lower_[i])
      throw Error(ErrorKind::BadParam, "box bounds must satisfy 0 <= lower <= upper");
  }
  size_ = count(lower_, upper_);
  if (size_ > size_cap)
    throw Error(ErrorKind::SizeCap, "truncated space has " + std::to_string(size_) +
                                        " states, above the cap of " +
                                        std::to_string(size_cap));
  stride_.assign(lower_.size(), 1);
  for (std::size_t i = lower_.size(); i-- > 1;)
    stride_[i - 1] = stride_[i] * static_cast<std::size_t>(upper_[i] - lower_[i] + 1);
}

bool TruncatedSpace::contains(std::span<const int> x) const {
  for (std::size_t i = 0; i < lower_.size(); ++i)
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  return true;
}

std::size_t TruncatedSpace::index_of(std::span<const int> x) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return npos;
    idx += static_cast<std::size_t>(x[i] - lower_[i]) * stride_[i];
  }
  return idx;
}

void TruncatedSpace::state(std::size_t index, std::span<int> out) const {
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    out[i] = lower_[i] + static_cast<int>(index / stride_[i]);
    index %= stride_[i];
  }
}

State TruncatedSpace::state(std::size_t index) const {
  State x(lower_.size());
  state(index, x);
  return x;
}

TruncatedSpace enumerate_space(std::vector<int> lower, std::vector<int> upper,
                               std::size_t size_cap) {
  return TruncatedSpace(std::move(lower), std::move(upper), size_cap);
}

}  // namespace srnfilter
