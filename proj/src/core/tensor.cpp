#include "tote/core/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "tote/kernels/kernels.hpp"

namespace tote {

namespace {

thread_local bool g_grad_enabled = true;

const kernels::Ops& K() { return kernels::ops(); }

void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool any_requires_grad(const std::vector<TensorPtr>& parents) {
  for (const auto& p : parents)
    if (p && p->requires_grad) return true;
  return false;
}

TensorPtr new_node(std::vector<int> shape, std::vector<TensorPtr> parents,
                   std::function<void(Tensor&)> fn) {
  auto t = make_tensor(std::move(shape));
  if (g_grad_enabled && any_requires_grad(parents)) {
    t->requires_grad = true;
    t->parents = std::move(parents);
    t->backward_fn = std::move(fn);
  }
  return t;
}

}  // namespace

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(size_t(t->numel()), 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  check(int(data.size()) == t->numel(), "make_tensor: data size mismatch");
  t->data = std::move(data);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr make_scalar(double v, bool requires_grad) {
  return make_tensor({1}, {v}, requires_grad);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

void backward(const TensorPtr& root) {
  check(root->numel() == 1, "backward: root must be a scalar");
  if (!root->requires_grad) return;

  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  struct Frame {
    Tensor* t;
    size_t next;
  };
  std::vector<Frame> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.t->parents.size()) {
      Tensor* p = f.t->parents[f.next++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* t = *it;
    if (!t->backward_fn) continue;
    for (auto& p : t->parents)
      if (p && p->requires_grad) p->ensure_grad();
    t->backward_fn(*t);
  }
}

namespace ops {

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  check(a->ndim() == 2 && b->ndim() == 2 && a->cols() == b->rows(), "matmul: shape mismatch");
  const int m = a->rows(), k = a->cols(), n = b->cols();
  auto out = new_node({m, n}, {a, b}, [a, b, m, k, n](Tensor& self) {
    if (a->requires_grad) K().gemm_nt(m, k, n, self.grad.data(), b->data.data(), a->grad.data(), true);
    if (b->requires_grad) K().gemm_tn(k, n, m, a->data.data(), self.grad.data(), b->grad.data(), true);
  });
  K().gemm_nn(m, n, k, a->data.data(), b->data.data(), out->data.data(), false);
  return out;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
  check(a->ndim() == 2 && b->ndim() == 2 && a->cols() == b->cols(), "matmul_nt: shape mismatch");
  const int m = a->rows(), k = a->cols(), n = b->rows();
  auto out = new_node({m, n}, {a, b}, [a, b, m, k, n](Tensor& self) {
    if (a->requires_grad) K().gemm_nn(m, k, n, self.grad.data(), b->data.data(), a->grad.data(), true);
    if (b->requires_grad) K().gemm_tn(n, k, m, self.grad.data(), a->data.data(), b->grad.data(), true);
  });
  K().gemm_nt(m, n, k, a->data.data(), b->data.data(), out->data.data(), false);
  return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  check(x->ndim() == 2 && w->ndim() == 2 && x->cols() == w->rows(), "linear: shape mismatch");
  const int n = x->rows(), in = x->cols(), out_dim = w->cols();
  check(b->numel() == out_dim, "linear: bias size mismatch");
  auto out = new_node({n, out_dim}, {x, w, b}, [x, w, b, n, in, out_dim](Tensor& self) {
    if (x->requires_grad)
      K().gemm_nt(n, in, out_dim, self.grad.data(), w->data.data(), x->grad.data(), true);
    if (w->requires_grad)
      K().gemm_tn(in, out_dim, n, x->data.data(), self.grad.data(), w->grad.data(), true);
    if (b->requires_grad)
      for (int i = 0; i < n; ++i)
        K().axpy(out_dim, 1.0, self.grad.data() + size_t(i) * out_dim, b->grad.data());
  });
  K().gemm_nn(n, out_dim, in, x->data.data(), w->data.data(), out->data.data(), false);
  for (int i = 0; i < n; ++i)
    K().axpy(out_dim, 1.0, b->data.data(), out->data.data() + size_t(i) * out_dim);
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  check(a->shape == b->shape, "add: shape mismatch");
  const int n = a->numel();
  auto out = new_node(a->shape, {a, b}, [a, b, n](Tensor& self) {
    if (a->requires_grad) K().axpy(n, 1.0, self.grad.data(), a->grad.data());
    if (b->requires_grad) K().axpy(n, 1.0, self.grad.data(), b->grad.data());
  });
  K().vadd(n, a->data.data(), b->data.data(), out->data.data());
  return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  check(a->shape == b->shape, "sub: shape mismatch");
  const int n = a->numel();
  auto out = new_node(a->shape, {a, b}, [a, b, n](Tensor& self) {
    if (a->requires_grad) K().axpy(n, 1.0, self.grad.data(), a->grad.data());
    if (b->requires_grad) K().axpy(n, -1.0, self.grad.data(), b->grad.data());
  });
  for (int i = 0; i < n; ++i) out->data[size_t(i)] = a->data[size_t(i)] - b->data[size_t(i)];
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  check(a->shape == b->shape, "mul: shape mismatch");
  const int n = a->numel();
  auto out = new_node(a->shape, {a, b}, [a, b, n](Tensor& self) {
    if (a->requires_grad)
      for (int i = 0; i < n; ++i) a->grad[size_t(i)] += self.grad[size_t(i)] * b->data[size_t(i)];
    if (b->requires_grad)
      for (int i = 0; i < n; ++i) b->grad[size_t(i)] += self.grad[size_t(i)] * a->data[size_t(i)];
  });
  K().vmul(n, a->data.data(), b->data.data(), out->data.data());
  return out;
}

TensorPtr scale(const TensorPtr& a, double s) {
  const int n = a->numel();
  auto out = new_node(a->shape, {a}, [a, s, n](Tensor& self) {
    if (a->requires_grad) K().axpy(n, s, self.grad.data(), a->grad.data());
  });
  K().vscale(n, s, a->data.data(), out->data.data());
  return out;
}

TensorPtr transpose(const TensorPtr& x) {
  check(x->ndim() == 2, "transpose: want 2D");
  const int m = x->rows(), n = x->cols();
  auto out = new_node({n, m}, {x}, [x, m, n](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        x->grad[size_t(j) * n + i] += self.grad[size_t(i) * m + j];
  });
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->data[size_t(j) * m + i] = x->data[size_t(i) * n + j];
  return out;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
  auto out = new_node(std::move(shape), {x}, [x](Tensor& self) {
    if (x->requires_grad) K().axpy(x->numel(), 1.0, self.grad.data(), x->grad.data());
  });
  check(out->numel() == x->numel(), "reshape: element count mismatch");
  out->data = x->data;
  return out;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
  check(!parts.empty(), "concat_rows: empty");
  const int c = parts[0]->cols();
  int r = 0;
  for (const auto& p : parts) {
    check(p->ndim() == 2 && p->cols() == c, "concat_rows: column mismatch");
    r += p->rows();
  }
  auto out = new_node({r, c}, parts, [parts, c](Tensor& self) {
    size_t off = 0;
    for (const auto& p : parts) {
      const size_t len = p->data.size();
      if (p->requires_grad) K().axpy(int(len), 1.0, self.grad.data() + off, p->grad.data());
      off += len;
    }
  });
  size_t off = 0;
  for (const auto& p : parts) {
    std::memcpy(out->data.data() + off, p->data.data(), p->data.size() * sizeof(double));
    off += p->data.size();
  }
  return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
  check(!parts.empty(), "concat_cols: empty");
  const int r = parts[0]->rows();
  int c = 0;
  for (const auto& p : parts) {
    check(p->ndim() == 2 && p->rows() == r, "concat_cols: row mismatch");
    c += p->cols();
  }
  auto out = new_node({r, c}, parts, [parts, r, c](Tensor& self) {
    int c0 = 0;
    for (const auto& p : parts) {
      const int pc = p->cols();
      if (p->requires_grad)
        for (int i = 0; i < r; ++i)
          K().axpy(pc, 1.0, self.grad.data() + size_t(i) * c + c0, p->grad.data() + size_t(i) * pc);
      c0 += pc;
    }
  });
  int c0 = 0;
  for (const auto& p : parts) {
    const int pc = p->cols();
    for (int i = 0; i < r; ++i)
      std::memcpy(out->data.data() + size_t(i) * c + c0, p->data.data() + size_t(i) * pc,
                  size_t(pc) * sizeof(double));
    c0 += pc;
  }
  return out;
}

TensorPtr slice_rows(const TensorPtr& x, int r0, int nrows) {
  check(x->ndim() == 2 && r0 >= 0 && r0 + nrows <= x->rows(), "slice_rows: out of range");
  const int c = x->cols();
  auto out = new_node({nrows, c}, {x}, [x, r0, nrows, c](Tensor& self) {
    if (x->requires_grad)
      K().axpy(nrows * c, 1.0, self.grad.data(), x->grad.data() + size_t(r0) * c);
  });
  std::memcpy(out->data.data(), x->data.data() + size_t(r0) * c,
              size_t(nrows) * c * sizeof(double));
  return out;
}

TensorPtr slice_cols(const TensorPtr& x, int c0, int ncols) {
  check(x->ndim() == 2 && c0 >= 0 && c0 + ncols <= x->cols(), "slice_cols: out of range");
  const int r = x->rows(), c = x->cols();
  auto out = new_node({r, ncols}, {x}, [x, c0, ncols, r, c](Tensor& self) {
    if (x->requires_grad)
      for (int i = 0; i < r; ++i)
        K().axpy(ncols, 1.0, self.grad.data() + size_t(i) * ncols,
                 x->grad.data() + size_t(i) * c + c0);
  });
  for (int i = 0; i < r; ++i)
    std::memcpy(out->data.data() + size_t(i) * ncols, x->data.data() + size_t(i) * c + c0,
                size_t(ncols) * sizeof(double));
  return out;
}

TensorPtr gather_rows(const TensorPtr& x, std::vector<int> rows) {
  check(x->ndim() == 2, "gather_rows: want 2D");
  const int c = x->cols();
  const int n = int(rows.size());
  for (int r : rows) check(r >= 0 && r < x->rows(), "gather_rows: index out of range");
  auto out = new_node({n, c}, {x}, [x, rows, n, c](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i)
      K().axpy(c, 1.0, self.grad.data() + size_t(i) * c, x->grad.data() + size_t(rows[size_t(i)]) * c);
  });
  for (int i = 0; i < n; ++i)
    std::memcpy(out->data.data() + size_t(i) * c, x->data.data() + size_t(rows[size_t(i)]) * c,
                size_t(c) * sizeof(double));
  return out;
}

TensorPtr mean_rows(const TensorPtr& x) {
  check(x->ndim() == 2 && x->rows() >= 1, "mean_rows: want nonempty 2D");
  const int n = x->rows(), c = x->cols();
  auto out = new_node({1, c}, {x}, [x, n, c](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i) K().axpy(c, 1.0 / n, self.grad.data(), x->grad.data() + size_t(i) * c);
  });
  for (int i = 0; i < n; ++i) K().axpy(c, 1.0 / n, x->data.data() + size_t(i) * c, out->data.data());
  return out;
}

TensorPtr sum(const TensorPtr& x) {
  const int n = x->numel();
  auto out = new_node({1}, {x}, [x, n](Tensor& self) {
    if (!x->requires_grad) return;
    const double g = self.grad[0];
    for (int i = 0; i < n; ++i) x->grad[size_t(i)] += g;
  });
  out->data[0] = K().reduce_sum(n, x->data.data());
  return out;
}

TensorPtr gelu(const TensorPtr& x) {
  const int n = x->numel();
  auto out = new_node(x->shape, {x}, [x, n](Tensor& self) {
    if (!x->requires_grad) return;
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    for (int i = 0; i < n; ++i) {
      const double v = x->data[size_t(i)];
      const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
      x->grad[size_t(i)] += self.grad[size_t(i)] * (cdf + v * pdf);
    }
  });
  for (int i = 0; i < n; ++i) {
    const double v = x->data[size_t(i)];
    out->data[size_t(i)] = 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440));
  }
  return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta, double eps) {
  check(x->ndim() == 2, "layer_norm: want 2D");
  const int n = x->rows(), d = x->cols();
  check(gamma->numel() == d && beta->numel() == d, "layer_norm: affine size mismatch");
  auto inv_sigma = std::make_shared<std::vector<double>>(size_t(n));
  auto xhat = std::make_shared<std::vector<double>>(size_t(n) * d);
  auto out = new_node(x->shape, {x, gamma, beta}, [x, gamma, beta, inv_sigma, xhat, n, d](Tensor& self) {
    for (int i = 0; i < n; ++i) {
      const double* dy = self.grad.data() + size_t(i) * d;
      const double* xh = xhat->data() + size_t(i) * d;
      const double is = (*inv_sigma)[size_t(i)];
      if (beta->requires_grad) K().axpy(d, 1.0, dy, beta->grad.data());
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < d; ++j) {
        const double dxh = dy[j] * gamma->data[size_t(j)];
        if (gamma->requires_grad) gamma->grad[size_t(j)] += dy[j] * xh[j];
        m1 += dxh;
        m2 += dxh * xh[j];
      }
      m1 /= d;
      m2 /= d;
      if (x->requires_grad) {
        double* dx = x->grad.data() + size_t(i) * d;
        for (int j = 0; j < d; ++j) {
          const double dxh = dy[j] * gamma->data[size_t(j)];
          dx[j] += is * (dxh - m1 - xh[j] * m2);
        }
      }
    }
  });
  for (int i = 0; i < n; ++i) {
    const double* row = x->data.data() + size_t(i) * d;
    const double mean = K().reduce_sum(d, row) / d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[size_t(i)] = is;
    double* orow = out->data.data() + size_t(i) * d;
    double* xh = xhat->data() + size_t(i) * d;
    for (int j = 0; j < d; ++j) {
      xh[j] = (row[j] - mean) * is;
      orow[j] = xh[j] * gamma->data[size_t(j)] + beta->data[size_t(j)];
    }
  }
  return out;
}

TensorPtr softmax_rows(const TensorPtr& x) {
  check(x->ndim() == 2, "softmax_rows: want 2D");
  const int n = x->rows(), d = x->cols();
  auto out = new_node(x->shape, {x}, [x, n, d](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i) {
      const double* y = self.data.data() + size_t(i) * d;
      const double* dy = self.grad.data() + size_t(i) * d;
      const double s = K().dot(d, y, dy);
      double* dx = x->grad.data() + size_t(i) * d;
      for (int j = 0; j < d; ++j) dx[j] += y[j] * (dy[j] - s);
    }
  });
  for (int i = 0; i < n; ++i) {
    const double* row = x->data.data() + size_t(i) * d;
    double* orow = out->data.data() + size_t(i) * d;
    const double mx = K().reduce_max(d, row);
    for (int j = 0; j < d; ++j) orow[j] = std::exp(row[j] - mx);
    const double z = K().reduce_sum(d, orow);
    K().vscale(d, 1.0 / z, orow, orow);
  }
  return out;
}

TensorPtr cross_entropy_rows(const TensorPtr& logits, const std::vector<int>& targets) {
  check(logits->ndim() == 2 && int(targets.size()) == logits->rows(),
        "cross_entropy_rows: target count mismatch");
  const int n = logits->rows(), d = logits->cols();
  for (int t : targets) check(t >= 0 && t < d, "cross_entropy_rows: target out of range");
  auto probs = std::make_shared<std::vector<double>>(size_t(n) * d);
  auto out = new_node({1}, {logits}, [logits, targets, probs, n, d](Tensor& self) {
    if (!logits->requires_grad) return;
    const double g = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      const double* p = probs->data() + size_t(i) * d;
      double* dl = logits->grad.data() + size_t(i) * d;
      for (int j = 0; j < d; ++j) dl[j] += g * p[j];
      dl[targets[size_t(i)]] -= g;
    }
  });
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = logits->data.data() + size_t(i) * d;
    double* p = probs->data() + size_t(i) * d;
    const double mx = K().reduce_max(d, row);
    double z = 0.0;
    for (int j = 0; j < d; ++j) {
      p[j] = std::exp(row[j] - mx);
      z += p[j];
    }
    K().vscale(d, 1.0 / z, p, p);
    loss -= row[targets[size_t(i)]] - mx - std::log(z);
  }
  out->data[0] = loss / n;
  return out;
}

TensorPtr bce_with_logits(const TensorPtr& logits, const TensorPtr& targets) {
  check(logits->shape == targets->shape, "bce_with_logits: shape mismatch");
  const int n = logits->numel();
  auto out = new_node({1}, {logits}, [logits, targets, n](Tensor& self) {
    if (!logits->requires_grad) return;
    const double g = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      const double v = logits->data[size_t(i)];
      const double s = 1.0 / (1.0 + std::exp(-v));
      logits->grad[size_t(i)] += g * (s - targets->data[size_t(i)]);
    }
  });
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = logits->data[size_t(i)];
    const double t = targets->data[size_t(i)];
    loss += std::max(v, 0.0) - v * t + std::log1p(std::exp(-std::fabs(v)));
  }
  out->data[0] = loss / n;
  return out;
}

TensorPtr smooth_l1_sum(const TensorPtr& pred, const TensorPtr& target, double beta) {
  check(pred->shape == target->shape, "smooth_l1_sum: shape mismatch");
  check(beta > 0.0, "smooth_l1_sum: beta must be positive");
  const int n = pred->numel();
  auto out = new_node({1}, {pred, target}, [pred, target, beta, n](Tensor& self) {
    const double g = self.grad[0];
    for (int i = 0; i < n; ++i) {
      const double d = pred->data[size_t(i)] - target->data[size_t(i)];
      const double dd = (std::fabs(d) < beta) ? d / beta : (d > 0 ? 1.0 : -1.0);
      if (pred->requires_grad) pred->grad[size_t(i)] += g * dd;
      if (target->requires_grad) target->grad[size_t(i)] -= g * dd;
    }
  });
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::fabs(pred->data[size_t(i)] - target->data[size_t(i)]);
    loss += (d < beta) ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  out->data[0] = loss;
  return out;
}

TensorPtr l2_normalize_rows(const TensorPtr& x) {
  check(x->ndim() == 2, "l2_normalize_rows: want 2D");
  const int n = x->rows(), d = x->cols();
  auto norms = std::make_shared<std::vector<double>>(size_t(n));
  auto out = new_node(x->shape, {x}, [x, norms, n, d](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i) {
      const double* y = self.data.data() + size_t(i) * d;
      const double* dy = self.grad.data() + size_t(i) * d;
      const double s = K().dot(d, y, dy);
      double* dx = x->grad.data() + size_t(i) * d;
      const double inv = 1.0 / (*norms)[size_t(i)];
      for (int j = 0; j < d; ++j) dx[j] += (dy[j] - y[j] * s) * inv;
    }
  });
  for (int i = 0; i < n; ++i) {
    const double* row = x->data.data() + size_t(i) * d;
    const double nrm = std::sqrt(K().dot(d, row, row));
    if (nrm < 1e-12) throw std::runtime_error("l2_normalize_rows: degenerate (near-zero) embedding");
    (*norms)[size_t(i)] = nrm;
    K().vscale(d, 1.0 / nrm, row, out->data.data() + size_t(i) * d);
  }
  return out;
}

TensorPtr exp_clamped(const TensorPtr& x, double max_value) {
  const int n = x->numel();
  auto out = new_node(x->shape, {x}, [x, max_value, n](Tensor& self) {
    if (!x->requires_grad) return;
    for (int i = 0; i < n; ++i) {
      const double y = self.data[size_t(i)];
      if (y < max_value) x->grad[size_t(i)] += self.grad[size_t(i)] * y;
    }
  });
  for (int i = 0; i < n; ++i)
    out->data[size_t(i)] = std::min(std::exp(x->data[size_t(i)]), max_value);
  return out;
}

TensorPtr mul_scalar_tensor(const TensorPtr& x, const TensorPtr& s) {
  check(s->numel() == 1, "mul_scalar_tensor: scalar must have one element");
  const int n = x->numel();
  auto out = new_node(x->shape, {x, s}, [x, s, n](Tensor& self) {
    if (x->requires_grad) K().axpy(n, s->data[0], self.grad.data(), x->grad.data());
    if (s->requires_grad) s->grad[0] += K().dot(n, self.grad.data(), x->data.data());
  });
  K().vscale(n, s->data[0], x->data.data(), out->data.data());
  return out;
}

namespace {

// im2col for NHWC single image; out-of-bounds reads are zero.
void im2col(const double* x, int h, int w, int c, int kh, int kw, int stride, int pad, int ho,
            int wo, double* col) {
  for (int oy = 0; oy < ho; ++oy)
    for (int ox = 0; ox < wo; ++ox) {
      double* dst = col + (size_t(oy) * wo + ox) * (size_t(kh) * kw * c);
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx) {
          const int iy = oy * stride - pad + ky;
          const int ix = ox * stride - pad + kx;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::memset(dst, 0, size_t(c) * sizeof(double));
          } else {
            std::memcpy(dst, x + (size_t(iy) * w + ix) * c, size_t(c) * sizeof(double));
          }
          dst += c;
        }
    }
}

void col2im_add(const double* col, int h, int w, int c, int kh, int kw, int stride, int pad,
                int ho, int wo, double* dx) {
  for (int oy = 0; oy < ho; ++oy)
    for (int ox = 0; ox < wo; ++ox) {
      const double* src = col + (size_t(oy) * wo + ox) * (size_t(kh) * kw * c);
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx) {
          const int iy = oy * stride - pad + ky;
          const int ix = ox * stride - pad + kx;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w)
            K().axpy(c, 1.0, src, dx + (size_t(iy) * w + ix) * c);
          src += c;
        }
    }
}

}  // namespace

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride, int pad) {
  check(x->ndim() == 3 && w->ndim() == 4, "conv2d: want [H,W,C] and [kh,kw,ci,co]");
  const int h = x->dim(0), wd = x->dim(1), c = x->dim(2);
  const int kh = w->dim(0), kw = w->dim(1), ci = w->dim(2), co = w->dim(3);
  check(ci == c, "conv2d: channel mismatch");
  check(b->numel() == co, "conv2d: bias size mismatch");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (wd + 2 * pad - kw) / stride + 1;
  check(ho >= 1 && wo >= 1, "conv2d: output would be empty");

  const int patch = kh * kw * c;
  auto col = std::make_shared<std::vector<double>>(size_t(ho) * wo * patch);
  im2col(x->data.data(), h, wd, c, kh, kw, stride, pad, ho, wo, col->data());

  auto out = new_node({ho, wo, co}, {x, w, b},
                      [x, w, b, col, h, wd, c, kh, kw, stride, pad, ho, wo, co, patch](Tensor& self) {
    const int m = ho * wo;
    if (w->requires_grad)
      K().gemm_tn(patch, co, m, col->data(), self.grad.data(), w->grad.data(), true);
    if (b->requires_grad)
      for (int i = 0; i < m; ++i)
        K().axpy(co, 1.0, self.grad.data() + size_t(i) * co, b->grad.data());
    if (x->requires_grad) {
      std::vector<double> dcol(size_t(m) * patch);
      K().gemm_nt(m, patch, co, self.grad.data(), w->data.data(), dcol.data(), false);
      col2im_add(dcol.data(), h, wd, c, kh, kw, stride, pad, ho, wo, x->grad.data());
    }
  });
  const int m = ho * wo;
  K().gemm_nn(m, co, patch, col->data(), w->data.data(), out->data.data(), false);
  for (int i = 0; i < m; ++i)
    K().axpy(co, 1.0, b->data.data(), out->data.data() + size_t(i) * co);
  return out;
}

TensorPtr conv_transpose2x(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  check(x->ndim() == 3 && w->ndim() == 4 && w->dim(0) == 2 && w->dim(1) == 2,
        "conv_transpose2x: want [H,W,C] and [2,2,ci,co]");
  const int h = x->dim(0), wd = x->dim(1), c = x->dim(2);
  const int co = w->dim(3);
  check(w->dim(2) == c, "conv_transpose2x: channel mismatch");
  check(b->numel() == co, "conv_transpose2x: bias size mismatch");
  const int m = h * wd;

  auto out = new_node({2 * h, 2 * wd, co}, {x, w, b}, [x, w, b, h, wd, c, co, m](Tensor& self) {
    std::vector<double> dyo(size_t(m) * co);
    for (int dy = 0; dy < 2; ++dy)
      for (int dxo = 0; dxo < 2; ++dxo) {
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < wd; ++j)
            std::memcpy(dyo.data() + (size_t(i) * wd + j) * co,
                        self.grad.data() + (size_t(2 * i + dy) * (2 * wd) + (2 * j + dxo)) * co,
                        size_t(co) * sizeof(double));
        const double* woff = w->data.data() + (size_t(dy) * 2 + dxo) * c * co;
        if (x->requires_grad)
          K().gemm_nt(m, c, co, dyo.data(), woff, x->grad.data(), true);
        if (w->requires_grad)
          K().gemm_tn(c, co, m, x->data.data(),  dyo.data(),
                      w->grad.data() + (size_t(dy) * 2 + dxo) * c * co, true);
      }
    if (b->requires_grad) {
      const int total = 4 * m;
      for (int i = 0; i < total; ++i)
        K().axpy(co, 1.0, self.grad.data() + size_t(i) * co, b->grad.data());
    }
  });
  std::vector<double> yo(size_t(m) * co);
  for (int dy = 0; dy < 2; ++dy)
    for (int dxo = 0; dxo < 2; ++dxo) {
      const double* woff = w->data.data() + (size_t(dy) * 2 + dxo) * c * co;
      K().gemm_nn(m, co, c, x->data.data(), woff, yo.data(), false);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < wd; ++j) {
          double* dst = out->data.data() + (size_t(2 * i + dy) * (2 * wd) + (2 * j + dxo)) * co;
          const double* src = yo.data() + (size_t(i) * wd + j) * co;
          K().vadd(co, src, b->data.data(), dst);
        }
    }
  return out;
}

TensorPtr roi_align(const TensorPtr& fm, double y1, double x1, double y2, double x2, int R) {
  check(fm->ndim() == 3, "roi_align: want [H,W,C]");
  check(R >= 1 && y2 > y1 && x2 > x1, "roi_align: bad rect");
  const int h = fm->dim(0), w = fm->dim(1), c = fm->dim(2);
  const double bh = (y2 - y1) / R, bw = (x2 - x1) / R;

  struct Sample {
    int i00, i01, i10, i11;
    double w00, w01, w10, w11;
  };
  auto samples = std::make_shared<std::vector<Sample>>(size_t(R) * R);
  for (int by = 0; by < R; ++by)
    for (int bx = 0; bx < R; ++bx) {
      double sy = y1 + (by + 0.5) * bh;
      double sx = x1 + (bx + 0.5) * bw;
      sy = std::min(std::max(sy, 0.0), double(h - 1));
      sx = std::min(std::max(sx, 0.0), double(w - 1));
      const int y0 = std::min(int(sy), h - 2 >= 0 ? h - 2 : 0);
      const int x0 = std::min(int(sx), w - 2 >= 0 ? w - 2 : 0);
      const int y1i = std::min(y0 + 1, h - 1);
      const int x1i = std::min(x0 + 1, w - 1);
      const double fy = sy - y0, fx = sx - x0;
      Sample& s = (*samples)[size_t(by) * R + bx];
      s.i00 = (y0 * w + x0) * c;
      s.i01 = (y0 * w + x1i) * c;
      s.i10 = (y1i * w + x0) * c;
      s.i11 = (y1i * w + x1i) * c;
      s.w00 = (1 - fy) * (1 - fx);
      s.w01 = (1 - fy) * fx;
      s.w10 = fy * (1 - fx);
      s.w11 = fy * fx;
    }

  auto out = new_node({R, R, c}, {fm}, [fm, samples, R, c](Tensor& self) {
    if (!fm->requires_grad) return;
    for (int k = 0; k < R * R; ++k) {
      const Sample& s = (*samples)[size_t(k)];
      const double* dy = self.grad.data() + size_t(k) * c;
      K().axpy(c, s.w00, dy, fm->grad.data() + s.i00);
      K().axpy(c, s.w01, dy, fm->grad.data() + s.i01);
      K().axpy(c, s.w10, dy, fm->grad.data() + s.i10);
      K().axpy(c, s.w11, dy, fm->grad.data() + s.i11);
    }
  });
  for (int k = 0; k < R * R; ++k) {
    const Sample& s = (*samples)[size_t(k)];
    double* dst = out->data.data() + size_t(k) * c;
    const double* f = fm->data.data();
    for (int j = 0; j < c; ++j)
      dst[j] = s.w00 * f[s.i00 + j] + s.w01 * f[s.i01 + j] + s.w10 * f[s.i10 + j] +
               s.w11 * f[s.i11 + j];
  }
  return out;
}

}  // namespace ops

}  // namespace tote
