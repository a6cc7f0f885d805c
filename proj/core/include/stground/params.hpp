#pragma once

#include "stground/matrix.hpp"

namespace stground::net {

// The four trainable projections: global f/g and local token f'/g'.
// All are d x d' and applied on the right of row-vector features.
struct ModelParams {
  num::Matrix W_f;
  num::Matrix W_g;
  num::Matrix W_f_prime;
  num::Matrix W_g_prime;

  std::size_t d() const { return W_f.rows(); }
  std::size_t d_prime() const { return W_f.cols(); }

  static ModelParams random_init(std::size_t d, std::size_t d_prime, num::Rng& rng);
  void validate() const;
};

}  // namespace stground::net
