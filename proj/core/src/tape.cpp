#include "stground/tape.hpp"

#include <algorithm>
#include <cmath>

namespace stground::num {

Var Tape::constant(Matrix value) {
  return {this, emplace(std::move(value), false, {}, nullptr)};
}

Var Tape::param(Matrix value) {
  TapeNode* n = emplace(std::move(value), true, {}, nullptr);
  n->ensure_grad();
  return {this, n};
}

TapeNode* Tape::emplace(Matrix value, bool requires_grad,
                        std::vector<TapeNode*> parents,
                        std::function<void(TapeNode&)> back) {
  auto node = std::make_unique<TapeNode>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->parents = std::move(parents);
  node->backward = std::move(back);
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

void Tape::backward(const Var& output) {
  TapeNode* out = output.node();
  if (out->value.rows() != 1 || out->value.cols() != 1) {
    throw DimMismatchError("backward output must be scalar");
  }
  out->ensure_grad();
  out->grad.at(0, 0) = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TapeNode& n = **it;
    if (n.requires_grad && n.backward && n.grad.size() != 0) {
      n.backward(n);
    }
  }
}

namespace {

bool any_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars) {
    if (v->requires_grad()) return true;
  }
  return false;
}

void accumulate(TapeNode* p, const Matrix& delta) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  auto g = p->grad.data();
  auto d = delta.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape* t = a.tape();
  Matrix value = matmul(a.value(), b.value());
  TapeNode* na = a.node();
  TapeNode* nb = b.node();
  const bool rg = any_grad({&a, &b});
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na, nb](TapeNode& self) {
      if (na->requires_grad) accumulate(na, matmul(self.grad, transpose(nb->value)));
      if (nb->requires_grad) accumulate(nb, matmul(transpose(na->value), self.grad));
    };
  }
  return {t, t->emplace(std::move(value), rg, {na, nb}, std::move(back))};
}

Var transpose(const Var& a) {
  Tape* t = a.tape();
  TapeNode* na = a.node();
  const bool rg = a.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na](TapeNode& self) { accumulate(na, transpose(self.grad)); };
  }
  return {t, t->emplace(transpose(a.value()), rg, {na}, std::move(back))};
}

Var add(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) throw DimMismatchError("add");
  Tape* t = a.tape();
  Matrix value = a.value();
  {
    auto v = value.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  }
  TapeNode* na = a.node();
  TapeNode* nb = b.node();
  const bool rg = any_grad({&a, &b});
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na, nb](TapeNode& self) {
      accumulate(na, self.grad);
      accumulate(nb, self.grad);
    };
  }
  return {t, t->emplace(std::move(value), rg, {na, nb}, std::move(back))};
}

Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) throw DimMismatchError("sub");
  Tape* t = a.tape();
  Matrix value = a.value();
  {
    auto v = value.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  }
  TapeNode* na = a.node();
  TapeNode* nb = b.node();
  const bool rg = any_grad({&a, &b});
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na, nb](TapeNode& self) {
      accumulate(na, self.grad);
      if (nb->requires_grad) {
        nb->ensure_grad();
        auto g = nb->grad.data();
        auto d = self.grad.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= d[i];
      }
    };
  }
  return {t, t->emplace(std::move(value), rg, {na, nb}, std::move(back))};
}

Var scale(const Var& a, double c) {
  Tape* t = a.tape();
  Matrix value = a.value();
  for (auto& v : value.data()) v *= c;
  TapeNode* na = a.node();
  const bool rg = a.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na, c](TapeNode& self) {
      na->ensure_grad();
      auto g = na->grad.data();
      auto d = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * d[i];
    };
  }
  return {t, t->emplace(std::move(value), rg, {na}, std::move(back))};
}

Var row_l2_normalize(const Var& a) {
  Tape* t = a.tape();
  Matrix value = row_l2_normalize(a.value());
  TapeNode* na = a.node();
  const bool rg = a.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na](TapeNode& self) {
      // y = x / |x|; gx = (g - (g.y) y) / |x|
      Matrix delta(na->value.rows(), na->value.cols());
      for (std::size_t r = 0; r < na->value.rows(); ++r) {
        double nsq = 0.0;
        for (std::size_t c = 0; c < na->value.cols(); ++c) {
          nsq += na->value.at(r, c) * na->value.at(r, c);
        }
        const double n = std::sqrt(nsq);
        double gy = 0.0;
        for (std::size_t c = 0; c < na->value.cols(); ++c) {
          gy += self.grad.at(r, c) * self.value.at(r, c);
        }
        for (std::size_t c = 0; c < na->value.cols(); ++c) {
          delta.at(r, c) = (self.grad.at(r, c) - gy * self.value.at(r, c)) / n;
        }
      }
      accumulate(na, delta);
    };
  }
  return {t, t->emplace(std::move(value), rg, {na}, std::move(back))};
}

Var row_softmax(const Var& a) {
  Tape* t = a.tape();
  Matrix value = row_softmax(a.value());
  TapeNode* na = a.node();
  const bool rg = a.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na](TapeNode& self) {
      Matrix delta(self.value.rows(), self.value.cols());
      for (std::size_t r = 0; r < self.value.rows(); ++r) {
        double gy = 0.0;
        for (std::size_t c = 0; c < self.value.cols(); ++c) {
          gy += self.grad.at(r, c) * self.value.at(r, c);
        }
        for (std::size_t c = 0; c < self.value.cols(); ++c) {
          delta.at(r, c) = self.value.at(r, c) * (self.grad.at(r, c) - gy);
        }
      }
      accumulate(na, delta);
    };
  }
  return {t, t->emplace(std::move(value), rg, {na}, std::move(back))};
}

Var mean_rows(const Var& a) {
  Tape* t = a.tape();
  const Matrix& av = a.value();
  Matrix value(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) value.at(0, c) += av.at(r, c);
  }
  for (std::size_t c = 0; c < av.cols(); ++c) value.at(0, c) /= static_cast<double>(av.rows());
  TapeNode* na = a.node();
  const bool rg = a.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [na](TapeNode& self) {
      const double inv = 1.0 / static_cast<double>(na->value.rows());
      Matrix delta(na->value.rows(), na->value.cols());
      for (std::size_t r = 0; r < na->value.rows(); ++r) {
        for (std::size_t c = 0; c < na->value.cols(); ++c) {
          delta.at(r, c) = self.grad.at(0, c) * inv;
        }
      }
      accumulate(na, delta);
    };
  }
  return {t, t->emplace(std::move(value), rg, {na}, std::move(back))};
}

Var concat_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DimMismatchError("concat_rows of nothing");
  Tape* t = rows.front().tape();
  const std::size_t cols = rows.front().value().cols();
  Matrix value(rows.size(), cols);
  std::vector<TapeNode*> parents;
  bool rg = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Matrix& rv = rows[r].value();
    if (rv.rows() != 1 || rv.cols() != cols) throw DimMismatchError("concat_rows shape");
    for (std::size_t c = 0; c < cols; ++c) value.at(r, c) = rv.at(0, c);
    parents.push_back(rows[r].node());
    rg = rg || rows[r].requires_grad();
  }
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [](TapeNode& self) {
      for (std::size_t r = 0; r < self.parents.size(); ++r) {
        TapeNode* p = self.parents[r];
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (std::size_t c = 0; c < self.value.cols(); ++c) {
          p->grad.at(0, c) += self.grad.at(r, c);
        }
      }
    };
  }
  return {t, t->emplace(std::move(value), rg, std::move(parents), std::move(back))};
}

Var nce_margin_loss(const Var& gram, double margin) {
  const Matrix& g = gram.value();
  if (g.rows() != g.cols()) throw DimMismatchError("nce gram must be square");
  const std::size_t b = g.rows();
  Tape* t = gram.tape();

  // Per batch element l, two softmax-style ratios: imposters down the column
  // (other videos vs this sentence) and along the row (this video vs other
  // sentences). The diagonal carries the margin.
  auto column_logits = [&](std::size_t l, std::vector<double>& out) {
    out.resize(b);
    for (std::size_t k = 0; k < b; ++k) out[k] = (k == l) ? g.at(l, l) - margin : g.at(k, l);
  };
  auto row_logits = [&](std::size_t l, std::vector<double>& out) {
    out.resize(b);
    for (std::size_t k = 0; k < b; ++k) out[k] = (k == l) ? g.at(l, l) - margin : g.at(l, k);
  };
  auto log_softmax_at = [](const std::vector<double>& z, std::size_t i) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    return z[i] - mx - std::log(s);
  };

  double loss = 0.0;
  std::vector<double> z;
  for (std::size_t l = 0; l < b; ++l) {
    column_logits(l, z);
    loss -= log_softmax_at(z, l);
    row_logits(l, z);
    loss -= log_softmax_at(z, l);
  }
  loss /= static_cast<double>(b);

  TapeNode* ng = gram.node();
  const bool rg = gram.requires_grad();
  std::function<void(TapeNode&)> back;
  if (rg) {
    back = [ng, margin, b](TapeNode& self) {
      const double up = self.grad.at(0, 0) / static_cast<double>(b);
      const Matrix& g = ng->value;
      Matrix delta(b, b);
      std::vector<double> z(b), p(b);
      auto softmax_into = [&]() {
        double mx = z[0];
        for (double v : z) mx = std::max(mx, v);
        double s = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
          p[k] = std::exp(z[k] - mx);
          s += p[k];
        }
        for (std::size_t k = 0; k < b; ++k) p[k] /= s;
      };
      for (std::size_t l = 0; l < b; ++l) {
        // column direction: logits z_k over G[k][l] (diagonal shifted)
        for (std::size_t k = 0; k < b; ++k) z[k] = (k == l) ? g.at(l, l) - margin : g.at(k, l);
        softmax_into();
        for (std::size_t k = 0; k < b; ++k) {
          const double d = ((k == l) ? 1.0 : 0.0) - p[k];
          delta.at(k, l) -= up * d;
        }
        // row direction: logits z_k over G[l][k]
        for (std::size_t k = 0; k < b; ++k) z[k] = (k == l) ? g.at(l, l) - margin : g.at(l, k);
        softmax_into();
        for (std::size_t k = 0; k < b; ++k) {
          const double d = ((k == l) ? 1.0 : 0.0) - p[k];
          delta.at(l, k) -= up * d;
        }
      }
      accumulate(ng, delta);
    };
  }
  return {t, t->emplace(Matrix(1, 1, loss), rg, {ng}, std::move(back))};
}

}  // namespace stground::num
