#pragma once

#include <array>
#include <vector>

namespace llab {

struct TriQuadPoint {
  std::array<double, 3> bary;
  double weight;  // fraction of the triangle area
};

// Order-2 rule with interior points (assembly).
const std::vector<TriQuadPoint>& quad3();
// Order-5 seven-point rule (norms).
const std::vector<TriQuadPoint>& quad7();

}  // namespace llab
