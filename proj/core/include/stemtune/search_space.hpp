#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stemtune/optics.hpp"

namespace stemtune {

/// Bounded box over the active aberration coefficients. Stock layouts:
/// d = 3 (first order), d = 4 (second order), d = 7 (combined).
struct SearchSpace {
  struct Axis {
    Coeff coeff = Coeff::c10;
    double lower = -10.0;
    double upper = 10.0;
  };

  std::vector<Axis> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  void validate() const;  // lower < upper, zero inside, no repeated coeff

  AberrationState to_state(std::span<const double> x) const;
  std::vector<double> from_state(const AberrationState& state) const;
  bool contains(std::span<const double> x) const;
  std::vector<double> clip(std::vector<double> x) const;

  std::array<std::optional<std::pair<double, double>>, kNumCoeffs> coeff_bounds() const;

  static SearchSpace first_order();   // c10, c12a, c12b in [-10, 10] nm
  static SearchSpace second_order();  // c21a/b, c23a/b in [-300, 300] nm
  static SearchSpace combined();      // all seven
};

}  // namespace stemtune
