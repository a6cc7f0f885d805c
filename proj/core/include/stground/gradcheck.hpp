#pragma once

#include <functional>
#include <map>
#include <string>

#include "stground/matrix.hpp"
#include "stground/tape.hpp"

namespace stground::num {

using ParamMap = std::map<std::string, Matrix>;
using LossFn = std::function<double(const ParamMap&)>;

// Central-difference audit of analytic gradients. Returns the max over all
// coordinates of |analytic - cd| / max(1e-8, |analytic| + |cd|), with
// cd = (f(p+h) - f(p-h)) / 2h.
double finite_diff_check(const LossFn& loss_fn, const ParamMap& params,
                         const ParamMap& analytic_grads, double step);

}  // namespace stground::num
