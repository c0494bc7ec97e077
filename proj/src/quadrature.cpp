#include "llab/quadrature.hpp"

namespace llab {

const std::vector<TriQuadPoint>& quad3() {
  static const std::vector<TriQuadPoint> q = {
      {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, 1.0 / 3.0},
      {{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, 1.0 / 3.0},
      {{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, 1.0 / 3.0},
  };
  return q;
}

const std::vector<TriQuadPoint>& quad7() {
  constexpr double a1 = 0.059715871789769820, b1 = 0.470142064105115090, w1 = 0.132394152788506181;
  constexpr double a2 = 0.797426985353087322, b2 = 0.101286507323456339, w2 = 0.125939180544827153;
  static const std::vector<TriQuadPoint> q = {
      {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.225},
      {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
      {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2},
  };
  return q;
}

}  // namespace llab
