#pragma once

#include <algorithm>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "vlab/error.hpp"
#include "vlab/numeric.hpp"

namespace vlab {

/// A point of [0,1] together with its distance to 1. Keeping u = 1 - x
/// separately lets callers probe points closer to 1 than double spacing allows.
struct Point {
  double x;
  double u;

  static Point at(double x) { return {x, 1.0 - x}; }
  static Point from_one(double u) { return {1.0 - u, u}; }
};

/// Half-open interval [lo, hi) inside [0, 1].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double l, double h) : lo(l), hi(h) {
    if (!(lo < hi) || lo < -kTol || hi > 1.0 + kTol)
      throw Error(ErrorCode::PreconditionViolation,
                  "invalid interval [" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }

  double measure() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t < hi; }
  bool contains(const Point& p) const {
    if (p.x < lo) return false;
    if (hi >= 1.0) return p.u > 0.0;
    return p.x < hi;
  }
  double mid() const { return 0.5 * (lo + hi); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of pairwise disjoint half-open intervals, kept sorted and merged.
class IntervalSet {
 public:
  IntervalSet() = default;
  IntervalSet(std::initializer_list<Interval> ivs) : ivs_(ivs) { normalize(); }
  explicit IntervalSet(std::vector<Interval> ivs) : ivs_(std::move(ivs)) { normalize(); }
  explicit IntervalSet(const Interval& iv) : ivs_{iv} {}

  std::span<const Interval> intervals() const { return ivs_; }
  bool empty() const { return ivs_.empty(); }
  std::size_t size() const { return ivs_.size(); }

  double measure() const {
    KahanSum s;
    for (const auto& iv : ivs_) s += iv.measure();
    return s.value();
  }

  bool contains(double t) const {
    auto it = std::upper_bound(ivs_.begin(), ivs_.end(), t,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    if (it == ivs_.begin()) return false;
    return std::prev(it)->contains(t);
  }
  bool contains(const Point& p) const {
    for (const auto& iv : ivs_)
      if (iv.contains(p)) return true;
    return false;
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < ivs_.size() && j < other.ivs_.size()) {
      const double lo = std::max(ivs_[i].lo, other.ivs_[j].lo);
      const double hi = std::min(ivs_[i].hi, other.ivs_[j].hi);
      if (lo < hi) out.push_back(Interval(lo, hi));
      if (ivs_[i].hi < other.ivs_[j].hi)
        ++i;
      else
        ++j;
    }
    IntervalSet r;
    r.ivs_ = std::move(out);
    r.normalize();
    return r;
  }

  IntervalSet unite(const IntervalSet& other) const {
    std::vector<Interval> all(ivs_.begin(), ivs_.end());
    all.insert(all.end(), other.ivs_.begin(), other.ivs_.end());
    return IntervalSet(std::move(all));
  }

  IntervalSet subtract(const IntervalSet& other) const {
    std::vector<Interval> out;
    for (const auto& iv : ivs_) {
      double cur = iv.lo;
      for (const auto& cut : other.ivs_) {
        if (cut.hi <= cur) continue;
        if (cut.lo >= iv.hi) break;
        if (cut.lo > cur) out.push_back(Interval(cur, std::min(cut.lo, iv.hi)));
        cur = std::max(cur, cut.hi);
        if (cur >= iv.hi) break;
      }
      if (cur < iv.hi) out.push_back(Interval(cur, iv.hi));
    }
    IntervalSet r;
    r.ivs_ = std::move(out);
    r.normalize();
    return r;
  }

  bool disjoint_from(const IntervalSet& other) const { return intersect(other).measure() <= kTol; }

  double lo() const { return ivs_.empty() ? 0.0 : ivs_.front().lo; }
  double hi() const { return ivs_.empty() ? 0.0 : ivs_.back().hi; }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  void normalize() {
    std::erase_if(ivs_, [](const Interval& iv) { return !(iv.lo < iv.hi); });
    std::sort(ivs_.begin(), ivs_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : ivs_) {
      if (!merged.empty() && iv.lo <= merged.back().hi + kTol)
        merged.back().hi = std::max(merged.back().hi, iv.hi);
      else
        merged.push_back(iv);
    }
    ivs_ = std::move(merged);
  }

  std::vector<Interval> ivs_;
};

inline double measure(const IntervalSet& s) { return s.measure(); }

/// True if the sets are pairwise disjoint up to null overlaps.
inline bool pairwise_disjoint(std::span<const IntervalSet> sets) {
  std::vector<Interval> all;
  for (const auto& s : sets) all.insert(all.end(), s.intervals().begin(), s.intervals().end());
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].lo < all[i - 1].hi - kTol) return false;
  return true;
}

}  // namespace vlab
