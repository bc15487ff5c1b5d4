#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrgan/rng.hpp"
#include "mrgan/tensor.hpp"

namespace mrgan {

// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

// Records a single forward computation and replays it in reverse to obtain
// gradients. Single-threaded; independent tapes may run concurrently.
//
// Conventions:
//  - reductions run in fixed left-to-right order (bit-reproducible),
//  - elementwise binary ops accept equal shapes, or a second operand that
//    matches the first with its leading batch axis dropped,
//  - any other shape mismatch is a ContractViolation naming both shapes.
class Tape {
 public:
  // ---- graph construction ------------------------------------------------
  Var leaf(Tensor value);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // ---- gradients -----------------------------------------------------------
  // Reverse sweep from a scalar (shape []) loss. Seeds d(loss)/d(loss) = 1;
  // fan-out accumulates by summation. Gradients are then available via grad().
  void backward(Var loss);
  const Tensor& grad(Var v) const;
  bool has_gradients() const { return !grads_.empty(); }

  // Drops all nodes and gradients; the tape can be reused.
  void reset();

  // ---- elementwise ---------------------------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var exp(Var a);
  // Train-mode dropout: zeroes with probability p, scales survivors 1/(1-p).
  Var dropout(Var a, double p, Rng& rng);

  // ---- shape / linear algebra ---------------------------------------------
  Var reshape(Var a, Shape shape);
  // Swaps the first two axes: [a,b,rest] -> [b,a,rest].
  Var swap_axes01(Var a);
  Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);

  // ---- reductions -----------------------------------------------------------
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var sum_axis(Var a, std::size_t axis);
  Var mean_axis(Var a, std::size_t axis);
  Var l1_norm(Var a);
  Var l2_norm_sq(Var a);
  // Per-row squared norm over all trailing axes: [n,...] -> [n].
  Var row_sumsq(Var a);
  Var logsumexp(Var a, std::size_t axis);

  // ---- indexed / structured -------------------------------------------------
  // out[i] = a[i, idx[i]] for a [n,K]; idx values must lie in [0,K).
  Var take_per_row(Var a, const std::vector<std::size_t>& idx);
  // [n,K] -> [n,K+1] with an appended all-zero column.
  Var pad_zero_column(Var a);
  // y[..., k] = x[..., k] - s[...] (broadcast over the last axis).
  Var sub_broadcast_last(Var x, Var s);

  // ---- neural-net specific ---------------------------------------------------
  // w[r,:] = g[r] * v[r,:] / ||v[r,:]|| with the norm over all trailing axes.
  Var weight_norm(Var v, Var g);
  Var conv2d(Var x, Var w, int stride, int pad);
  Var conv_transpose2d(Var x, Var w, int stride, int pad, int out_pad = 0);
  // x[b,c,h,w] + bias[c]
  Var channel_bias(Var x, Var b);
  Var global_avg_pool(Var x);
  // Normalizes over all axes except axis 1 (channels/features). Exposes the
  // batch statistics so callers can maintain running averages.
  Var batch_norm_train(Var x, Var gamma, Var beta, double eps, Tensor* batch_mean = nullptr,
                       Tensor* batch_var = nullptr);
  Var batch_norm_infer(Var x, Var gamma, Var beta, const Tensor& running_mean,
                       const Tensor& running_var, double eps);

 private:
  struct Node {
    Tensor value;
    std::function<void(Tape&, const Tensor&)> back;  // null for leaves
  };

  Var push(Tensor value, std::function<void(Tape&, const Tensor&)> back);
  Tensor& grad_buf(std::uint32_t id);
  void check_on_tape(Var v, const char* who) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;

  friend struct TapeOpsAccess;
};

// Shape of a conv output extent: floor((in + 2*pad - kernel)/stride) + 1.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int pad);
// Transposed conv: (in - 1)*stride + kernel - 2*pad + out_pad.
std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, int stride, int pad,
                                      int out_pad);

}  // namespace mrgan
