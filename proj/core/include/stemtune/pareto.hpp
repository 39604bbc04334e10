#pragma once

#include <span>
#include <vector>

#include "stemtune/rewards.hpp"

namespace stemtune {

/// Maximization convention: a dominates b iff a >= b component-wise and
/// a > b somewhere.
bool dominates(const RewardVector& a, const RewardVector& b);

/// Indices of the non-dominated points, ascending. Duplicates of a front
/// point are all retained.
std::vector<int> pareto_front(std::span<const RewardVector> points);

/// Exact bi-objective hypervolume of the region dominated by `points`
/// (front extraction included) above reference point `ref`.
double hypervolume(std::span<const RewardVector> points, const RewardVector& ref);

/// Hypervolume improvement of adding `candidate`; the exclusive area it
/// dominates beyond the existing front. Always >= 0.
double hvi(std::span<const RewardVector> front, const RewardVector& ref,
           const RewardVector& candidate);

/// Running archive of every evaluated (x, f) pair. Keeps the front, a
/// data-driven reference point and the current hypervolume in sync.
class ParetoArchive {
 public:
  struct Entry {
    std::vector<double> x;
    RewardVector f;
  };

  void add(std::vector<double> x, const RewardVector& f);

  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<int>& front() const { return front_; }
  const RewardVector& reference() const { return ref_; }
  double hv() const { return hv_; }
  std::vector<RewardVector> front_rewards() const;

  /// Hypervolume of the current front against an externally chosen r.
  double hv_with_reference(const RewardVector& ref) const;

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

 private:
  void recompute();

  std::vector<Entry> entries_;
  std::vector<int> front_;
  RewardVector ref_{0.0, 0.0};
  double hv_ = 0.0;
};

}  // namespace stemtune
