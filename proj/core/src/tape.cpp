#include "mrgan/tape.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

void check_finite(const Tensor& t, const char* op) {
#ifdef MRGAN_STRICT_FINITE
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by op '") + op + "'");
  }
#else
  (void)t;
  (void)op;
#endif
}

// Resolves the broadcast mode for elementwise binary ops.
enum class Bcast { Same, LeadingAxis };

Bcast binary_mode(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Bcast::Same;
  if (a.size() == b.size() + 1 && std::equal(a.begin() + 1, a.end(), b.begin())) {
    return Bcast::LeadingAxis;
  }
  throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                          shape_str(b) + " (only leading batch-axis broadcast is allowed)");
}

}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> back) {
  require(grads_.empty(), "Tape: cannot extend a tape after backward(); call reset() first");
  nodes_.push_back(Node{std::move(value), std::move(back)});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::check_on_tape(Var v, const char* who) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw ContractViolation(std::string(who) + ": node is not on this tape");
  }
}

Var Tape::leaf(Tensor value) {
  check_finite(value, "leaf");
  return push(std::move(value), nullptr);
}

const Tensor& Tape::value(Var v) const {
  check_on_tape(v, "Tape::value");
  return nodes_[v.id].value;
}

const Tensor& Tape::grad(Var v) const {
  check_on_tape(v, "Tape::grad");
  require(!grads_.empty(), "Tape::grad: backward() has not been run");
  return grads_[v.id];
}

Tensor& Tape::grad_buf(std::uint32_t id) { return grads_[id]; }

void Tape::backward(Var loss) {
  check_on_tape(loss, "Tape::backward");
  const Tensor& lv = nodes_[loss.id].value;
  require(lv.rank() == 0, "Tape::backward: loss must be a scalar of shape [], got " +
                              shape_str(lv.shape()));
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.shape());
  grads_[loss.id][0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].back && grads_[i].size() > 0) {
      nodes_[i].back(*this, grads_[i]);
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
}

// ---- elementwise -------------------------------------------------------------

Var Tape::add(Var a, Var b) {
  check_on_tape(a, "add");
  check_on_tape(b, "add");
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  const Bcast mode = binary_mode(av.shape(), bv.shape(), "add");
  Tensor out(av.shape());
  if (mode == Bcast::Same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  } else {
    const std::size_t inner = bv.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i % inner];
  }
  check_finite(out, "add");
  const auto ai = a.id, bi = b.id;
  return push(std::move(out), [ai, bi, mode](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad_buf(bi);
    if (mode == Bcast::Same) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    } else {
      const std::size_t inner = gb.size();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  check_on_tape(a, "sub");
  check_on_tape(b, "sub");
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  const Bcast mode = binary_mode(av.shape(), bv.shape(), "sub");
  Tensor out(av.shape());
  if (mode == Bcast::Same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  } else {
    const std::size_t inner = bv.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i % inner];
  }
  check_finite(out, "sub");
  const auto ai = a.id, bi = b.id;
  return push(std::move(out), [ai, bi, mode](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad_buf(bi);
    if (mode == Bcast::Same) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    } else {
      const std::size_t inner = gb.size();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check_on_tape(a, "mul");
  check_on_tape(b, "mul");
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  const Bcast mode = binary_mode(av.shape(), bv.shape(), "mul");
  Tensor out(av.shape());
  if (mode == Bcast::Same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  } else {
    const std::size_t inner = bv.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i % inner];
  }
  check_finite(out, "mul");
  const auto ai = a.id, bi = b.id;
  return push(std::move(out), [ai, bi, mode](Tape& t, const Tensor& g) {
    const Tensor& av = t.nodes_[ai].value;
    const Tensor& bv = t.nodes_[bi].value;
    Tensor& ga = t.grad_buf(ai);
    Tensor& gb = t.grad_buf(bi);
    if (mode == Bcast::Same) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv[i];
        gb[i] += g[i] * av[i];
      }
    } else {
      const std::size_t inner = bv.size();
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv[i % inner];
        gb[i % inner] += g[i] * av[i];
      }
    }
  });
}

Var Tape::scale(Var a, double s) {
  check_on_tape(a, "scale");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * av[i];
  check_finite(out, "scale");
  const auto ai = a.id;
  return push(std::move(out), [ai, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var Tape::relu(Var a) { return leaky_relu(a, 0.0); }

Var Tape::leaky_relu(Var a, double slope) {
  check_on_tape(a, "leaky_relu");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] >= 0.0 ? av[i] : slope * av[i];
  check_finite(out, "leaky_relu");
  const auto ai = a.id;
  return push(std::move(out), [ai, slope](Tape& t, const Tensor& g) {
    const Tensor& av = t.nodes_[ai].value;
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (av[i] >= 0.0 ? 1.0 : slope) * g[i];
  });
}

Var Tape::tanh(Var a) {
  check_on_tape(a, "tanh");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  check_finite(out, "tanh");
  const auto ai = a.id;
  const auto oi = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [ai, oi](Tape& t, const Tensor& g) {
    const Tensor& y = t.nodes_[oi].value;
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (1.0 - y[i] * y[i]) * g[i];
  });
}

Var Tape::sin(Var a) {
  check_on_tape(a, "sin");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(av[i]);
  check_finite(out, "sin");
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    const Tensor& av = t.nodes_[ai].value;
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += std::cos(av[i]) * g[i];
  });
}

Var Tape::cos(Var a) {
  check_on_tape(a, "cos");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(av[i]);
  check_finite(out, "cos");
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    const Tensor& av = t.nodes_[ai].value;
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += -std::sin(av[i]) * g[i];
  });
}

Var Tape::exp(Var a) {
  check_on_tape(a, "exp");
  const Tensor& av = nodes_[a.id].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  check_finite(out, "exp");
  const auto ai = a.id;
  const auto oi = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [ai, oi](Tape& t, const Tensor& g) {
    const Tensor& y = t.nodes_[oi].value;
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * g[i];
  });
}

Var Tape::dropout(Var a, double p, Rng& rng) {
  check_on_tape(a, "dropout");
  require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0,1), got " + std::to_string(p));
  const Tensor& av = nodes_[a.id].value;
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(av.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * mask[i];
  check_finite(out, "dropout");
  const auto ai = a.id;
  return push(std::move(out), [ai, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += mask[i] * g[i];
  });
}

Var Tape::reshape(Var a, Shape shape) {
  check_on_tape(a, "reshape");
  const Tensor& av = nodes_[a.id].value;
  require(numel(shape) == av.size(), "reshape: cannot view " + shape_str(av.shape()) + " as " +
                                         shape_str(shape));
  Tensor out = av.reshaped(std::move(shape));
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int pad) {
  const auto padded = static_cast<long long>(in) + 2 * pad - static_cast<long long>(kernel);
  if (padded < 0) return 0;
  return static_cast<std::size_t>(padded / stride + 1);
}

std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, int stride, int pad,
                                      int out_pad) {
  const auto ext = static_cast<long long>(in - 1) * stride + static_cast<long long>(kernel) -
                   2 * pad + out_pad;
  return ext < 0 ? 0 : static_cast<std::size_t>(ext);
}

}  // namespace mrgan
