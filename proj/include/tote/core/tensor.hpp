#pragma once

// Small tape-based reverse-mode autodiff over row-major double tensors.
// Heavy inner loops (matmul, reductions, elementwise) run through the
// dispatched kernels; everything is sequential and deterministic.

#include <functional>
#include <memory>
#include <vector>

namespace tote {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;

  int numel() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int ndim() const { return int(shape.size()); }
  int dim(int i) const { return shape[size_t(i)]; }
  // 2D helpers
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() { grad.assign(data.size(), 0.0); }
  bool all_finite() const;
};

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
TensorPtr make_scalar(double v, bool requires_grad = false);

// Records backward closures only while enabled (it is enabled by default);
// inference paths wrap themselves in a NoGradGuard.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// Seeds root->grad with 1 (root must have a single element) and runs the tape
// in reverse topological order.
void backward(const TensorPtr& root);

namespace ops {

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // [m,k]x[k,n]
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // [m,k]x[n,k]^T
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);  // x[n,i] w[i,o] b[o]
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);
TensorPtr transpose(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);
TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr slice_rows(const TensorPtr& x, int r0, int nrows);
TensorPtr slice_cols(const TensorPtr& x, int c0, int ncols);
TensorPtr gather_rows(const TensorPtr& x, std::vector<int> rows);
TensorPtr mean_rows(const TensorPtr& x);  // [n,d] -> [1,d]
TensorPtr sum(const TensorPtr& x);        // -> [1]
TensorPtr gelu(const TensorPtr& x);
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps = 1e-6);  // normalizes each row
TensorPtr softmax_rows(const TensorPtr& x);
// Mean over rows of -log softmax(logits)[i, target_i].
TensorPtr cross_entropy_rows(const TensorPtr& logits, const std::vector<int>& targets);
// Mean over elements; targets in [0,1], not differentiated.
TensorPtr bce_with_logits(const TensorPtr& logits, const TensorPtr& targets);
// Sum over elements of the Huber-style penalty; caller normalizes.
TensorPtr smooth_l1_sum(const TensorPtr& pred, const TensorPtr& target, double beta);
TensorPtr l2_normalize_rows(const TensorPtr& x);  // throws on near-zero rows
TensorPtr exp_clamped(const TensorPtr& x, double max_value);  // elementwise
TensorPtr mul_scalar_tensor(const TensorPtr& x, const TensorPtr& s);  // s is [1]

// Image-grid ops, NHWC with a leading singleton batch elided: x is [H,W,C].
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w /*[kh,kw,ci,co]*/, const TensorPtr& b,
                 int stride, int pad);
// Stride-2 2x2 transposed conv (no output overlap): [H,W,C] -> [2H,2W,Co].
TensorPtr conv_transpose2x(const TensorPtr& x, const TensorPtr& w /*[2,2,ci,co]*/,
                           const TensorPtr& b);
// Bilinear pooling of an axis-aligned rect given in continuous cell
// coordinates (y1,x1,y2,x2) onto an R x R grid, one sample per bin center.
// The rect is a constant: gradients flow to the feature map only.
TensorPtr roi_align(const TensorPtr& fm /*[H,W,C]*/, double y1, double x1, double y2, double x2,
                    int R);

}  // namespace ops

}  // namespace tote
