#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polygame/error.hpp"

namespace polygame {

// Subsets of a ground set are bitmasks over element positions.
using Mask = std::uint64_t;

inline constexpr std::size_t kMaxGround = 63;

inline int popcount(Mask m) { return std::popcount(m); }
inline Mask bit(std::size_t i) { return Mask{1} << i; }
inline bool contains(Mask m, std::size_t i) { return (m >> i) & 1U; }
inline Mask full_mask(std::size_t m) { return m == 0 ? 0 : (~Mask{0} >> (64 - m)); }

inline std::vector<std::size_t> members(Mask m) {
  std::vector<std::size_t> out;
  while (m != 0) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

// A finite, lexicographically ordered set of resource identifiers. Copies
// share the underlying storage.
class GroundSet {
 public:
  GroundSet() : elems_(std::make_shared<const std::vector<std::string>>()) {}

  explicit GroundSet(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw InvalidSpec("duplicate resource identifier '" +
                        *std::adjacent_find(ids.begin(), ids.end()) + "'");
    }
    if (ids.size() > kMaxGround) {
      throw GroundTooLarge("ground set has " + std::to_string(ids.size()) +
                           " elements, at most " + std::to_string(kMaxGround) +
                           " supported");
    }
    elems_ = std::make_shared<const std::vector<std::string>>(std::move(ids));
  }

  GroundSet(std::initializer_list<std::string> ids)
      : GroundSet(std::vector<std::string>(ids)) {}

  // "a".."z" for small sizes, "e01".."eNN" beyond.
  static GroundSet letters(std::size_t m) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < m; ++i) {
      if (m <= 26) {
        ids.emplace_back(1, static_cast<char>('a' + i));
      } else {
        std::string s = std::to_string(i + 1);
        ids.push_back("e" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s);
      }
    }
    return GroundSet(std::move(ids));
  }

  std::size_t size() const { return elems_->size(); }
  bool empty() const { return elems_->empty(); }
  const std::string& operator[](std::size_t i) const { return (*elems_)[i]; }
  const std::vector<std::string>& elements() const { return *elems_; }
  auto begin() const { return elems_->begin(); }
  auto end() const { return elems_->end(); }
  Mask full() const { return full_mask(size()); }

  std::size_t index_of(std::string_view id) const {
    auto it = std::lower_bound(elems_->begin(), elems_->end(), id);
    if (it == elems_->end() || *it != id) {
      throw InvalidSpec("unknown resource '" + std::string(id) + "'");
    }
    return static_cast<std::size_t>(it - elems_->begin());
  }

  bool has(std::string_view id) const {
    return std::binary_search(elems_->begin(), elems_->end(), id);
  }

  Mask mask_of(std::span<const std::string> ids) const {
    Mask m = 0;
    for (const auto& id : ids) m |= bit(index_of(id));
    return m;
  }
  Mask mask_of(std::initializer_list<std::string> ids) const {
    return mask_of(std::span<const std::string>(ids.begin(), ids.size()));
  }

  std::vector<std::string> names(Mask m) const {
    std::vector<std::string> out;
    for (auto i : members(m)) out.push_back((*elems_)[i]);
    return out;
  }

  // Comma-joined identifiers, the subset key used in JSON tables.
  std::string key(Mask m) const {
    std::string out;
    for (auto i : members(m)) {
      if (!out.empty()) out += ',';
      out += (*elems_)[i];
    }
    return out;
  }

  friend bool operator==(const GroundSet& a, const GroundSet& b) {
    return a.elems_ == b.elems_ || *a.elems_ == *b.elems_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> elems_;
};

// A point of R_+^E keyed by the ground set.
class LoadVector {
 public:
  LoadVector() = default;
  explicit LoadVector(GroundSet ground)
      : ground_(std::move(ground)), values_(ground_.size(), 0.0) {}
  LoadVector(GroundSet ground, std::vector<double> values)
      : ground_(std::move(ground)), values_(std::move(values)) {
    if (values_.size() != ground_.size()) {
      throw InvalidSpec("load vector has " + std::to_string(values_.size()) +
                        " entries for a ground set of size " +
                        std::to_string(ground_.size()));
    }
  }

  static LoadVector unit(const GroundSet& ground, std::size_t e) {
    LoadVector v(ground);
    v.values_.at(e) = 1.0;
    return v;
  }

  const GroundSet& ground() const { return ground_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::string_view id) const { return values_[ground_.index_of(id)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // x(U)
  double sum(Mask u) const {
    double s = 0.0;
    for (auto i : members(u)) s += values_[i];
    return s;
  }
  double total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  double min_entry() const {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
  }

  LoadVector& operator+=(const LoadVector& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  LoadVector& operator-=(const LoadVector& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  LoadVector& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend LoadVector operator+(LoadVector a, const LoadVector& b) { return a += b; }
  friend LoadVector operator-(LoadVector a, const LoadVector& b) { return a -= b; }
  friend LoadVector operator*(double s, LoadVector a) { return a *= s; }

 private:
  GroundSet ground_;
  std::vector<double> values_;
};

inline double linf_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double linf_distance(const LoadVector& a, const LoadVector& b) {
  return linf_distance(a.values(), b.values());
}

}  // namespace polygame
