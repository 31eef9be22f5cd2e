#pragma once

#include <cstddef>
#include <cstdint>

namespace lantern {

// Batched evaluation seam between the renderer and a scene field. Both the
// neural field and the analytic oracle implement it, so rendering, occupancy
// maintenance and their tests are field-agnostic.
class FieldEval {
 public:
  virtual ~FieldEval() = default;

  // pts: count x 3 points in the unit cube; dirs: count x 3 unit vectors.
  // sigma: count densities (>= 0); rgb: count x 3 colors in [0,1].
  virtual void eval(const double* pts, const double* dirs, std::size_t count,
                    double* sigma, double* rgb) const = 0;

  // Density only (occupancy updates).
  virtual void eval_sigma(const double* pts, std::size_t count,
                          double* sigma) const = 0;
};

}  // namespace lantern
