#include "lantern/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace lantern {

double gradient_check(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> point,
                      std::span<const double> analytic, double h) {
  LANTERN_CHECK(h > 0, "gradient_check: step must be positive");
  LANTERN_CHECK(point.size() == analytic.size(),
                "gradient_check: gradient length ", analytic.size(),
                " does not match point length ", point.size());

  std::vector<double> x(point.begin(), point.end());
  double max_rel = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw EngineError(
          cat("gradient_check: non-finite function value at component ", i));
    const double central = (fp - fm) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(central), 1e-12});
    max_rel = std::max(max_rel, std::abs(analytic[i] - central) / denom);
  }
  return max_rel;
}

}  // namespace lantern
