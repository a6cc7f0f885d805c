#pragma once

#include <vector>

#include "stground/features.hpp"
#include "stground/params.hpp"

namespace stground::ot {

// Word-to-frame similarity, K x U: P[k][u] = cosine(g(s_k), f(frame_u)).
struct SimilarityMatrix {
  num::Matrix P;
};

struct SinkhornConfig {
  double epsilon = 0.1;
  int max_iters = 500;
  double tol = 1e-6;
  bool log_domain = false;

  void validate() const;
};

// Transport plan on the polytope: rows (frames) sum to 1/U, columns (words)
// to 1/K. NotConverged is reported through the flag, not an exception; the
// last iterate is always returned.
struct SinkhornResult {
  num::Matrix Q;  // U x K, strictly positive
  // Log scaling vectors: Q = Diag(exp(log_alpha)) exp(P'/eps) Diag(exp(log_beta)).
  std::vector<double> log_alpha;  // U
  std::vector<double> log_beta;   // K
  int iters = 0;
  double violation = 0.0;
  bool converged = false;
};

enum class SelectionStrategy { None, Global, Local, Sinkhorn };

SimilarityMatrix similarity_matrix(const data::ClipFeatures& clip,
                                   const net::ModelParams& params);

SinkhornResult sinkhorn(const SimilarityMatrix& sim, const SinkhornConfig& cfg);

// Returns min(T, U) distinct frame indices in ascending order. Ties broken
// by lower frame index.
std::vector<int> select_frames(const data::ClipFeatures& clip, SelectionStrategy strategy,
                               int t_frames, const net::ModelParams& params,
                               const SinkhornConfig& cfg);

}  // namespace stground::ot
