#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lantern/common.hpp"

namespace lantern {

// Finite-difference oracle for every hand-written backward pass.
// f maps a flat parameter vector to a scalar; `analytic` is the gradient
// under test at `point`. Returns the max over components of
//   |analytic_i - central_i| / max(|analytic_i|, |central_i|, 1e-12)
// with central_i = (f(x + h e_i) - f(x - h e_i)) / (2h).
double gradient_check(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> point,
                      std::span<const double> analytic, double h = 1e-3);

}  // namespace lantern
