#include "stemtune/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stemtune {

bool dominates(const RewardVector& a, const RewardVector& b) {
  return a.contrast >= b.contrast && a.fft >= b.fft &&
         (a.contrast > b.contrast || a.fft > b.fft);
}

std::vector<int> pareto_front(std::span<const RewardVector> points) {
  const int n = static_cast<int>(points.size());
  if (n == 0) return {};

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points[a].contrast != points[b].contrast)
      return points[a].contrast > points[b].contrast;
    return points[a].fft > points[b].fft;
  });

  // Sweep groups of equal contrast; a group's best fft survives iff it beats
  // everything already seen at strictly higher contrast. Duplicates of a
  // surviving objective vector are all retained.
  std::vector<int> front;
  double best_fft = -std::numeric_limits<double>::infinity();
  int i = 0;
  while (i < n) {
    int j = i;
    double group_max = -std::numeric_limits<double>::infinity();
    while (j < n && points[order[j]].contrast == points[order[i]].contrast) {
      group_max = std::max(group_max, points[order[j]].fft);
      ++j;
    }
    if (group_max > best_fft) {
      for (int k = i; k < j; ++k) {
        if (points[order[k]].fft == group_max) front.push_back(order[k]);
      }
      best_fft = group_max;
    }
    i = j;
  }
  std::sort(front.begin(), front.end());
  return front;
}

double hypervolume(std::span<const RewardVector> points, const RewardVector& ref) {
  // Keep only points strictly above the reference in both objectives.
  std::vector<RewardVector> live;
  for (const auto& p : points) {
    if (p.contrast > ref.contrast && p.fft > ref.fft) live.push_back(p);
  }
  if (live.empty()) return 0.0;

  const auto front_idx = pareto_front(live);
  std::vector<RewardVector> front;
  front.reserve(front_idx.size());
  for (int i : front_idx) front.push_back(live[i]);
  std::sort(front.begin(), front.end(), [](const RewardVector& a, const RewardVector& b) {
    if (a.contrast != b.contrast) return a.contrast > b.contrast;
    return a.fft > b.fft;
  });

  // Staircase sweep in descending contrast order.
  double hv = 0.0;
  double covered_fft = ref.fft;
  for (const auto& p : front) {
    if (p.fft > covered_fft) {
      hv += (p.contrast - ref.contrast) * (p.fft - covered_fft);
      covered_fft = p.fft;
    }
  }
  return hv;
}

double hvi(std::span<const RewardVector> front, const RewardVector& ref,
           const RewardVector& candidate) {
  if (candidate.contrast <= ref.contrast || candidate.fft <= ref.fft) return 0.0;

  // Exclusive area of the candidate: its rectangle above r minus the part
  // already covered by the front, each front box clipped into the rectangle.
  std::vector<RewardVector> clipped;
  for (const auto& p : front) {
    if (dominates(p, candidate) || p == candidate) return 0.0;
    const RewardVector q{std::min(p.contrast, candidate.contrast),
                         std::min(p.fft, candidate.fft)};
    if (q.contrast > ref.contrast && q.fft > ref.fft) clipped.push_back(q);
  }
  const double rect =
      (candidate.contrast - ref.contrast) * (candidate.fft - ref.fft);
  return rect - hypervolume(clipped, ref);
}

void ParetoArchive::add(std::vector<double> x, const RewardVector& f) {
  entries_.push_back(Entry{std::move(x), f});
  if (entries_.size() == 1) {
    ref_ = f;  // degenerate range; widened as soon as spread appears
    front_ = {0};
    hv_ = 0.0;
    return;
  }
  if (f.contrast < ref_.contrast || f.fft < ref_.fft) {
    recompute();
    return;
  }
  const auto fr = front_rewards();
  hv_ += hvi(fr, ref_, f);
  std::vector<RewardVector> all;
  all.reserve(entries_.size());
  for (const auto& e : entries_) all.push_back(e.f);
  front_ = pareto_front(all);
}

void ParetoArchive::recompute() {
  RewardVector lo = entries_[0].f, hi = entries_[0].f;
  std::vector<RewardVector> all;
  all.reserve(entries_.size());
  for (const auto& e : entries_) {
    lo.contrast = std::min(lo.contrast, e.f.contrast);
    lo.fft = std::min(lo.fft, e.f.fft);
    hi.contrast = std::max(hi.contrast, e.f.contrast);
    hi.fft = std::max(hi.fft, e.f.fft);
    all.push_back(e.f);
  }
  ref_ = {lo.contrast - 0.1 * (hi.contrast - lo.contrast),
          lo.fft - 0.1 * (hi.fft - lo.fft)};
  front_ = pareto_front(all);
  hv_ = hypervolume(all, ref_);
}

std::vector<RewardVector> ParetoArchive::front_rewards() const {
  std::vector<RewardVector> out;
  out.reserve(front_.size());
  for (int i : front_) out.push_back(entries_[i].f);
  return out;
}

double ParetoArchive::hv_with_reference(const RewardVector& ref) const {
  std::vector<RewardVector> all;
  all.reserve(entries_.size());
  for (const auto& e : entries_) all.push_back(e.f);
  return hypervolume(all, ref);
}

}  // namespace stemtune
