#include "stground/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace stground::num {

double finite_diff_check(const LossFn& loss_fn, const ParamMap& params,
                         const ParamMap& analytic_grads, double step) {
  if (step <= 0.0) throw BadParamsError("finite_diff_check step");
  double worst = 0.0;
  ParamMap work = params;
  for (const auto& [name, grad] : analytic_grads) {
    Matrix& p = work.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.data()[i];
      p.data()[i] = orig + step;
      const double fp = loss_fn(work);
      p.data()[i] = orig - step;
      const double fm = loss_fn(work);
      p.data()[i] = orig;
      const double cd = (fp - fm) / (2.0 * step);
      const double an = grad.data()[i];
      const double rel = std::abs(an - cd) / std::max(1e-8, std::abs(an) + std::abs(cd));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace stground::num
