#include <cmath>

#include "mrgan/errors.hpp"
#include "mrgan/tape.hpp"

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

// C[n,m] (+)= opA(A) * opB(B), plain triple loop, fixed accumulation order.
void gemm(double* c, const double* a, const double* b, std::size_t n, std::size_t k,
          std::size_t m, bool ta, bool tb, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < n * m; ++i) c[i] = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ta ? a[l * n + i] : a[i * k + l];
      const double* brow = tb ? nullptr : b + l * m;
      double* crow = c + i * m;
      if (tb) {
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * b[j * k + l];
      } else {
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

struct AxisSplit {
  std::size_t pre, n, post;
};

AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ContractViolation(std::string(op) + ": axis " + std::to_string(axis) +
                            " out of range for shape " + shape_str(s));
  }
  AxisSplit out{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) out.pre *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.post *= s[i];
  return out;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  return out;
}

}  // namespace

struct TapeOpsAccess {
  static Var push(Tape& t, Tensor value, std::function<void(Tape&, const Tensor&)> back) {
    return t.push(std::move(value), std::move(back));
  }
  static Tensor& grad_buf(Tape& t, std::uint32_t id) { return t.grad_buf(id); }
  static const Tensor& val(Tape& t, std::uint32_t id) { return t.nodes_[id].value; }
};

using A = TapeOpsAccess;

Var Tape::swap_axes01(Var a) {
  check_on_tape(a, "swap_axes01");
  const Tensor& av = nodes_[a.id].value;
  require(av.rank() >= 2, "swap_axes01: tensor must be rank >= 2, got " +
                              shape_str(av.shape()));
  const std::size_t d0 = av.extent(0), d1 = av.extent(1);
  std::size_t rest = 1;
  for (std::size_t i = 2; i < av.rank(); ++i) rest *= av.extent(i);
  Shape out_shape = av.shape();
  std::swap(out_shape[0], out_shape[1]);
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < d0; ++i) {
    for (std::size_t j = 0; j < d1; ++j) {
      const double* src = av.data() + (i * d1 + j) * rest;
      double* dst = out.data() + (j * d0 + i) * rest;
      for (std::size_t r = 0; r < rest; ++r) dst[r] = src[r];
    }
  }
  const auto ai = a.id;
  return push(std::move(out), [ai, d0, d1, rest](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < d0; ++i) {
      for (std::size_t j = 0; j < d1; ++j) {
        const double* src = g.data() + (j * d0 + i) * rest;
        double* dst = ga.data() + (i * d1 + j) * rest;
        for (std::size_t r = 0; r < rest; ++r) dst[r] += src[r];
      }
    }
  });
}

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  check_on_tape(a, "matmul");
  check_on_tape(b, "matmul");
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require(av.rank() == 2 && bv.rank() == 2,
          "matmul: operands must be rank-2, got " + shape_str(av.shape()) + " and " +
              shape_str(bv.shape()));
  const std::size_t n = transpose_a ? av.extent(1) : av.extent(0);
  const std::size_t k = transpose_a ? av.extent(0) : av.extent(1);
  const std::size_t kb = transpose_b ? bv.extent(1) : bv.extent(0);
  const std::size_t m = transpose_b ? bv.extent(0) : bv.extent(1);
  require(k == kb, "matmul: inner extents differ, " + shape_str(av.shape()) + " x " +
                       shape_str(bv.shape()));
  Tensor out({n, m});
  gemm(out.data(), av.data(), bv.data(), n, k, m, transpose_a, transpose_b, false);
  check_finite(out, "matmul");
  const auto ai = a.id, bi = b.id;
  return push(std::move(out), [ai, bi, n, k, m, transpose_a, transpose_b](Tape& t,
                                                                          const Tensor& g) {
    const Tensor& av = A::val(t, ai);
    const Tensor& bv = A::val(t, bi);
    Tensor& ga = t.grad_buf(ai);
    Tensor& gb = t.grad_buf(bi);
    // dC = G. With C = opA(A) opB(B):
    if (!transpose_a && !transpose_b) {
      gemm(ga.data(), g.data(), bv.data(), n, m, k, false, true, true);   // dA = G B^T
      gemm(gb.data(), av.data(), g.data(), k, n, m, true, false, true);   // dB = A^T G
    } else if (transpose_a && !transpose_b) {
      gemm(ga.data(), bv.data(), g.data(), k, m, n, false, true, true);   // dA = B G^T
      gemm(gb.data(), av.data(), g.data(), k, n, m, false, false, true);  // dB = A G
    } else if (!transpose_a && transpose_b) {
      gemm(ga.data(), g.data(), bv.data(), n, m, k, false, false, true);  // dA = G B
      gemm(gb.data(), g.data(), av.data(), m, n, k, true, false, true);   // dB = G^T A
    } else {
      gemm(ga.data(), bv.data(), g.data(), k, m, n, true, true, true);    // dA = B^T G^T
      gemm(gb.data(), g.data(), av.data(), m, n, k, true, true, true);    // dB = G^T A^T
    }
  });
}

Var Tape::sum_all(Var a) {
  check_on_tape(a, "sum_all");
  const Tensor& av = nodes_[a.id].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
  Tensor out = Tensor::scalar(acc);
  check_finite(out, "sum_all");
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

Var Tape::mean_all(Var a) {
  check_on_tape(a, "mean_all");
  const Tensor& av = nodes_[a.id].value;
  require(av.size() > 0, "mean_all: empty tensor");
  const double inv = 1.0 / static_cast<double>(av.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
  Tensor out = Tensor::scalar(acc * inv);
  check_finite(out, "mean_all");
  const auto ai = a.id;
  return push(std::move(out), [ai, inv](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * inv;
  });
}

Var Tape::sum_axis(Var a, std::size_t axis) {
  check_on_tape(a, "sum_axis");
  const Tensor& av = nodes_[a.id].value;
  const AxisSplit ax = split_axis(av.shape(), axis, "sum_axis");
  Tensor out(drop_axis(av.shape(), axis));
  for (std::size_t p = 0; p < ax.pre; ++p) {
    for (std::size_t q = 0; q < ax.post; ++q) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ax.n; ++i) acc += av[(p * ax.n + i) * ax.post + q];
      out[p * ax.post + q] = acc;
    }
  }
  check_finite(out, "sum_axis");
  const auto ai = a.id;
  return push(std::move(out), [ai, ax](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t p = 0; p < ax.pre; ++p) {
      for (std::size_t i = 0; i < ax.n; ++i) {
        for (std::size_t q = 0; q < ax.post; ++q) {
          ga[(p * ax.n + i) * ax.post + q] += g[p * ax.post + q];
        }
      }
    }
  });
}

Var Tape::mean_axis(Var a, std::size_t axis) {
  check_on_tape(a, "mean_axis");
  const Tensor& av = nodes_[a.id].value;
  const AxisSplit ax = split_axis(av.shape(), axis, "mean_axis");
  require(ax.n > 0, "mean_axis: empty reduction axis");
  Var s = sum_axis(a, axis);
  return scale(s, 1.0 / static_cast<double>(ax.n));
}

Var Tape::l1_norm(Var a) {
  check_on_tape(a, "l1_norm");
  const Tensor& av = nodes_[a.id].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::fabs(av[i]);
  Tensor out = Tensor::scalar(acc);
  check_finite(out, "l1_norm");
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    const Tensor& av = A::val(t, ai);
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = av[i] > 0.0 ? 1.0 : (av[i] < 0.0 ? -1.0 : 0.0);
      ga[i] += s * g[0];
    }
  });
}

Var Tape::l2_norm_sq(Var a) {
  check_on_tape(a, "l2_norm_sq");
  const Tensor& av = nodes_[a.id].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * av[i];
  Tensor out = Tensor::scalar(acc);
  check_finite(out, "l2_norm_sq");
  const auto ai = a.id;
  return push(std::move(out), [ai](Tape& t, const Tensor& g) {
    const Tensor& av = A::val(t, ai);
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * av[i] * g[0];
  });
}

Var Tape::row_sumsq(Var a) {
  check_on_tape(a, "row_sumsq");
  const Tensor& av = nodes_[a.id].value;
  require(av.rank() >= 1, "row_sumsq: tensor must have a leading row axis");
  const std::size_t rows = av.extent(0);
  require(rows > 0, "row_sumsq: empty row axis");
  const std::size_t cols = av.size() / rows;
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = av[r * cols + c];
      acc += v * v;
    }
    out[r] = acc;
  }
  check_finite(out, "row_sumsq");
  const auto ai = a.id;
  return push(std::move(out), [ai, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& av = A::val(t, ai);
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        ga[r * cols + c] += 2.0 * av[r * cols + c] * g[r];
      }
    }
  });
}

Var Tape::logsumexp(Var a, std::size_t axis) {
  check_on_tape(a, "logsumexp");
  const Tensor& av = nodes_[a.id].value;
  const AxisSplit ax = split_axis(av.shape(), axis, "logsumexp");
  require(ax.n > 0, "logsumexp: empty reduction axis");
  Tensor out(drop_axis(av.shape(), axis));
  for (std::size_t p = 0; p < ax.pre; ++p) {
    for (std::size_t q = 0; q < ax.post; ++q) {
      double m = -HUGE_VAL;
      for (std::size_t i = 0; i < ax.n; ++i) {
        m = std::max(m, av[(p * ax.n + i) * ax.post + q]);
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < ax.n; ++i) {
        acc += std::exp(av[(p * ax.n + i) * ax.post + q] - m);
      }
      out[p * ax.post + q] = m + std::log(acc);
    }
  }
  check_finite(out, "logsumexp");
  const auto ai = a.id;
  const auto oi = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [ai, oi, ax](Tape& t, const Tensor& g) {
    const Tensor& av = A::val(t, ai);
    const Tensor& lse = A::val(t, oi);
    Tensor& ga = t.grad_buf(ai);
    // d lse / d x_i = exp(x_i - lse) = softmax_i
    for (std::size_t p = 0; p < ax.pre; ++p) {
      for (std::size_t q = 0; q < ax.post; ++q) {
        const double go = g[p * ax.post + q];
        const double l = lse[p * ax.post + q];
        for (std::size_t i = 0; i < ax.n; ++i) {
          const std::size_t idx = (p * ax.n + i) * ax.post + q;
          ga[idx] += go * std::exp(av[idx] - l);
        }
      }
    }
  });
}

Var Tape::take_per_row(Var a, const std::vector<std::size_t>& idx) {
  check_on_tape(a, "take_per_row");
  const Tensor& av = nodes_[a.id].value;
  require(av.rank() == 2, "take_per_row: expected [n,K], got " + shape_str(av.shape()));
  const std::size_t n = av.extent(0), k = av.extent(1);
  require(idx.size() == n, "take_per_row: index count " + std::to_string(idx.size()) +
                               " != rows " + std::to_string(n));
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    require(idx[i] < k, "take_per_row: index " + std::to_string(idx[i]) +
                            " out of range [0," + std::to_string(k) + ")");
    out[i] = av[i * k + idx[i]];
  }
  const auto ai = a.id;
  return push(std::move(out), [ai, idx, k](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < idx.size(); ++i) ga[i * k + idx[i]] += g[i];
  });
}

Var Tape::pad_zero_column(Var a) {
  check_on_tape(a, "pad_zero_column");
  const Tensor& av = nodes_[a.id].value;
  require(av.rank() == 2, "pad_zero_column: expected [n,K], got " + shape_str(av.shape()));
  const std::size_t n = av.extent(0), k = av.extent(1);
  Tensor out({n, k + 1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * (k + 1) + j] = av[i * k + j];
    out[i * (k + 1) + k] = 0.0;
  }
  const auto ai = a.id;
  return push(std::move(out), [ai, n, k](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) ga[i * k + j] += g[i * (k + 1) + j];
    }
  });
}

Var Tape::sub_broadcast_last(Var x, Var s) {
  check_on_tape(x, "sub_broadcast_last");
  check_on_tape(s, "sub_broadcast_last");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& sv = nodes_[s.id].value;
  require(xv.rank() >= 1, "sub_broadcast_last: x must have a last axis");
  const std::size_t k = xv.extent(xv.rank() - 1);
  require(sv.size() * k == xv.size(),
          "sub_broadcast_last: shape mismatch " + shape_str(xv.shape()) + " vs " +
              shape_str(sv.shape()));
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < sv.size(); ++r) {
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = xv[r * k + j] - sv[r];
  }
  check_finite(out, "sub_broadcast_last");
  const auto xi = x.id, si = s.id;
  return push(std::move(out), [xi, si, k](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buf(xi);
    Tensor& gs = t.grad_buf(si);
    for (std::size_t r = 0; r < gs.size(); ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        gx[r * k + j] += g[r * k + j];
        gs[r] -= g[r * k + j];
      }
    }
  });
}

Var Tape::weight_norm(Var v, Var g) {
  check_on_tape(v, "weight_norm");
  check_on_tape(g, "weight_norm");
  const Tensor& vv = nodes_[v.id].value;
  const Tensor& gv = nodes_[g.id].value;
  require(vv.rank() >= 2, "weight_norm: direction must be rank >= 2, got " +
                              shape_str(vv.shape()));
  const std::size_t rows = vv.extent(0);
  require(gv.size() == rows, "weight_norm: scale shape " + shape_str(gv.shape()) +
                                 " must have one entry per output row (" +
                                 std::to_string(rows) + ")");
  const std::size_t fan = vv.size() / rows;
  Tensor norms({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fan; ++c) {
      const double x = vv[r * fan + c];
      acc += x * x;
    }
    const double nrm = std::sqrt(acc);
    require(nrm > 0.0, "weight_norm: zero-norm direction row " + std::to_string(r));
    norms[r] = nrm;
  }
  Tensor out(vv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = gv[r] / norms[r];
    for (std::size_t c = 0; c < fan; ++c) out[r * fan + c] = s * vv[r * fan + c];
  }
  check_finite(out, "weight_norm");
  const auto vi = v.id, gi = g.id;
  return push(std::move(out), [vi, gi, rows, fan, norms = std::move(norms)](Tape& t,
                                                                            const Tensor& go) {
    const Tensor& vv = A::val(t, vi);
    const Tensor& gv = A::val(t, gi);
    Tensor& dv = t.grad_buf(vi);
    Tensor& dg = t.grad_buf(gi);
    for (std::size_t r = 0; r < rows; ++r) {
      const double nrm = norms[r];
      double dot_gu = 0.0;  // <G_r, u_r> with u = v/||v||
      for (std::size_t c = 0; c < fan; ++c) {
        dot_gu += go[r * fan + c] * vv[r * fan + c] / nrm;
      }
      dg[r] += dot_gu;
      const double s = gv[r] / nrm;
      for (std::size_t c = 0; c < fan; ++c) {
        const double u = vv[r * fan + c] / nrm;
        dv[r * fan + c] += s * (go[r * fan + c] - u * dot_gu);
      }
    }
  });
}

}  // namespace mrgan
