#include "stground/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stground::ot {

using num::Matrix;
using num::Vector;

void SinkhornConfig::validate() const {
  if (epsilon <= 0) throw BadParamsError("sinkhorn epsilon must be positive");
  if (tol <= 0) throw BadParamsError("sinkhorn tol must be positive");
  if (max_iters < 1) throw BadParamsError("sinkhorn max_iters must be positive");
}

namespace {

Vector project(const Vector& v, const Matrix& w) {
  if (v.dim() != w.rows()) throw DimMismatchError("projection");
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double vi = v[i];
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += vi * w.at(i, j);
  }
  return Vector(std::move(out));
}

double logsumexp(const std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

SinkhornResult sinkhorn_log(const Matrix& p_over_eps_t, const SinkhornConfig& cfg) {
  // p_over_eps_t is U x K. Scaling vectors kept in log space.
  const std::size_t u_count = p_over_eps_t.rows();
  const std::size_t k_count = p_over_eps_t.cols();
  const double log_ru = std::log(1.0 / static_cast<double>(u_count));
  const double log_ck = std::log(1.0 / static_cast<double>(k_count));
  std::vector<double> la(u_count, 0.0), lb(k_count, 0.0);
  std::vector<double> buf;
  SinkhornResult res;
  for (res.iters = 1; res.iters <= cfg.max_iters; ++res.iters) {
    // rows to 1/U
    for (std::size_t u = 0; u < u_count; ++u) {
      buf.assign(k_count, 0.0);
      for (std::size_t k = 0; k < k_count; ++k) buf[k] = p_over_eps_t.at(u, k) + lb[k];
      la[u] = log_ru - logsumexp(buf);
    }
    // columns to 1/K
    for (std::size_t k = 0; k < k_count; ++k) {
      buf.assign(u_count, 0.0);
      for (std::size_t u = 0; u < u_count; ++u) buf[u] = p_over_eps_t.at(u, k) + la[u];
      lb[k] = log_ck - logsumexp(buf);
    }
    // row violation after the column step
    double viol = 0.0;
    for (std::size_t u = 0; u < u_count; ++u) {
      double s = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        s += std::exp(p_over_eps_t.at(u, k) + la[u] + lb[k]);
      }
      viol = std::max(viol, std::abs(s - 1.0 / static_cast<double>(u_count)));
    }
    res.violation = viol;
    if (viol < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.iters = std::min(res.iters, cfg.max_iters);
  Matrix q(u_count, k_count);
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t k = 0; k < k_count; ++k) {
      q.at(u, k) = std::exp(p_over_eps_t.at(u, k) + la[u] + lb[k]);
    }
  }
  res.Q = std::move(q);
  res.log_alpha = std::move(la);
  res.log_beta = std::move(lb);
  return res;
}

}  // namespace

SimilarityMatrix similarity_matrix(const data::ClipFeatures& clip,
                                   const net::ModelParams& params) {
  const std::size_t k_count = clip.word_count();
  const std::size_t u_count = clip.frames;
  std::vector<Vector> word_proj, frame_proj;
  for (const auto& w : clip.words) {
    word_proj.push_back(num::l2_normalize(project(w.vec, params.W_g)));
  }
  for (const auto& fg : clip.frame_global) {
    frame_proj.push_back(num::l2_normalize(project(fg, params.W_f)));
  }
  Matrix p(k_count, u_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t u = 0; u < u_count; ++u) {
      p.at(k, u) = num::dot(word_proj[k], frame_proj[u]);
    }
  }
  return {std::move(p)};
}

SinkhornResult sinkhorn(const SimilarityMatrix& sim, const SinkhornConfig& cfg) {
  cfg.validate();
  const Matrix& p = sim.P;
  p.check_finite("sinkhorn P");
  const std::size_t k_count = p.rows();
  const std::size_t u_count = p.cols();

  double max_abs = 0.0;
  for (double v : p.data()) max_abs = std::max(max_abs, std::abs(v));
  Matrix pt(u_count, k_count);
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t k = 0; k < k_count; ++k) pt.at(u, k) = p.at(k, u) / cfg.epsilon;
  }
  if (cfg.log_domain || max_abs / cfg.epsilon > 500.0) {
    return sinkhorn_log(pt, cfg);
  }

  Matrix q(u_count, k_count);
  for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = std::exp(pt.data()[i]);
  const double row_target = 1.0 / static_cast<double>(u_count);
  const double col_target = 1.0 / static_cast<double>(k_count);
  SinkhornResult res;
  std::vector<double> alpha(u_count, 1.0), beta(k_count, 1.0);
  for (res.iters = 1; res.iters <= cfg.max_iters; ++res.iters) {
    for (std::size_t u = 0; u < u_count; ++u) {
      double s = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) s += q.at(u, k);
      const double f = row_target / s;
      alpha[u] *= f;
      for (std::size_t k = 0; k < k_count; ++k) q.at(u, k) *= f;
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      double s = 0.0;
      for (std::size_t u = 0; u < u_count; ++u) s += q.at(u, k);
      const double f = col_target / s;
      beta[k] *= f;
      for (std::size_t u = 0; u < u_count; ++u) q.at(u, k) *= f;
    }
    double viol = 0.0;
    for (std::size_t u = 0; u < u_count; ++u) {
      double s = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) s += q.at(u, k);
      viol = std::max(viol, std::abs(s - row_target));
    }
    res.violation = viol;
    if (viol < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.iters = std::min(res.iters, cfg.max_iters);
  res.Q = std::move(q);
  res.log_alpha.resize(u_count);
  res.log_beta.resize(k_count);
  for (std::size_t u = 0; u < u_count; ++u) res.log_alpha[u] = std::log(alpha[u]);
  for (std::size_t k = 0; k < k_count; ++k) res.log_beta[k] = std::log(beta[k]);
  return res;
}

std::vector<int> select_frames(const data::ClipFeatures& clip, SelectionStrategy strategy,
                               int t_frames, const net::ModelParams& params,
                               const SinkhornConfig& cfg) {
  if (t_frames < 1) throw BadTError("T must be >= 1");
  const int u_count = static_cast<int>(clip.frames);
  const int t = std::min(t_frames, u_count);

  if (strategy == SelectionStrategy::None) {
    // Central contiguous block: the original boundary window inside the
    // extended candidate window.
    const int start = (u_count - t) / 2;
    std::vector<int> out(t);
    std::iota(out.begin(), out.end(), start);
    return out;
  }

  std::vector<double> score(u_count, 0.0);
  switch (strategy) {
    case SelectionStrategy::Global: {
      const Vector s = num::l2_normalize(project(clip.sentence, params.W_g));
      for (int u = 0; u < u_count; ++u) {
        score[u] = num::dot(s, num::l2_normalize(project(clip.frame_global[u], params.W_f)));
      }
      break;
    }
    case SelectionStrategy::Local: {
      const SimilarityMatrix sim = similarity_matrix(clip, params);
      for (int u = 0; u < u_count; ++u) {
        double mx = -2.0;
        for (std::size_t k = 0; k < clip.word_count(); ++k) {
          mx = std::max(mx, sim.P.at(k, u));
        }
        score[u] = mx;
      }
      break;
    }
    case SelectionStrategy::Sinkhorn: {
      // Row sums of the fully balanced plan are 1/U by construction and carry
      // no ranking signal. The aggregated similarity of frame u under the
      // plan is its contribution to the transport objective,
      // score(u) = sum_k Q[u][k] * P[k][u]: frames that spend their marginal
      // on genuinely similar words rank above frames that spend it on noise.
      const SimilarityMatrix sim = similarity_matrix(clip, params);
      const SinkhornResult res = sinkhorn(sim, cfg);
      for (int u = 0; u < u_count; ++u) {
        for (std::size_t k = 0; k < clip.word_count(); ++k) {
          score[u] += res.Q.at(u, k) * sim.P.at(k, u);
        }
      }
      break;
    }
    default:
      break;
  }

  std::vector<int> idx(u_count);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  idx.resize(t);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace stground::ot
