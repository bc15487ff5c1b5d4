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

struct ConvDims {
  std::size_t b, ci, h, w, co, kh, kw, oh, ow;
  int stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  require(x.rank() == 4, "conv2d: input must be [b,c,h,w], got " + shape_str(x.shape()));
  require(w.rank() == 4, "conv2d: weight must be [co,ci,kh,kw], got " + shape_str(w.shape()));
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(pad >= 0, "conv2d: pad must be >= 0");
  ConvDims d{x.extent(0), x.extent(1), x.extent(2), x.extent(3),
             w.extent(0), w.extent(2), w.extent(3), 0, 0, stride, pad};
  require(w.extent(1) == d.ci, "conv2d: weight fan-in " + std::to_string(w.extent(1)) +
                                   " != input channels " + std::to_string(d.ci));
  d.oh = conv_out_extent(d.h, d.kh, stride, pad);
  d.ow = conv_out_extent(d.w, d.kw, stride, pad);
  require(d.oh >= 1 && d.ow >= 1,
          "conv2d: non-positive output extent for input " + shape_str(x.shape()) +
              ", kernel " + shape_str(w.shape()) + ", stride " + std::to_string(stride) +
              ", pad " + std::to_string(pad));
  return d;
}

// Valid output range [lo, hi) for one spatial dim: 0 <= o*stride + k - pad < in.
void out_range(std::size_t in, std::size_t out, std::size_t k, int stride, int pad,
               std::size_t& lo, std::size_t& hi) {
  const long long num_lo = static_cast<long long>(pad) - static_cast<long long>(k);
  const long long num_hi = static_cast<long long>(in) - 1 - static_cast<long long>(k) + pad;
  if (num_hi < 0) {
    lo = hi = 0;
    return;
  }
  long long lo_ll = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  long long hi_ll = num_hi / stride;
  if (hi_ll >= static_cast<long long>(out)) hi_ll = static_cast<long long>(out) - 1;
  lo = static_cast<std::size_t>(lo_ll);
  hi = hi_ll < static_cast<long long>(lo) ? lo : static_cast<std::size_t>(hi_ll + 1);
}

}  // namespace

Var Tape::conv2d(Var x, Var w, int stride, int pad) {
  check_on_tape(x, "conv2d");
  check_on_tape(w, "conv2d");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  const ConvDims d = conv_dims(xv, wv, stride, pad);
  Tensor out({d.b, d.co, d.oh, d.ow});
  const double* xp = xv.data();
  const double* wp = wv.data();
  double* op = out.data();
  for (std::size_t b = 0; b < d.b; ++b) {
    for (std::size_t co = 0; co < d.co; ++co) {
      double* obase = op + (b * d.co + co) * d.oh * d.ow;
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* xbase = xp + (b * d.ci + ci) * d.h * d.w;
        const double* wbase = wp + (co * d.ci + ci) * d.kh * d.kw;
        for (std::size_t kh = 0; kh < d.kh; ++kh) {
          for (std::size_t kw = 0; kw < d.kw; ++kw) {
            const double wval = wbase[kh * d.kw + kw];
            if (wval == 0.0) continue;
            std::size_t oh_lo, oh_hi, ow_lo, ow_hi;
            out_range(d.h, d.oh, kh, stride, pad, oh_lo, oh_hi);
            out_range(d.w, d.ow, kw, stride, pad, ow_lo, ow_hi);
            for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
              const std::size_t ih = oh * stride + kh - pad;
              const double* xrow = xbase + ih * d.w;
              double* orow = obase + oh * d.ow;
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                orow[ow] += wval * xrow[ow * stride + kw - pad];
              }
            }
          }
        }
      }
    }
  }
  check_finite(out, "conv2d");
  const auto xi = x.id, wi = w.id;
  return push(std::move(out), [xi, wi, d](Tape& t, const Tensor& g) {
    const Tensor& xv = t.nodes_[xi].value;
    const Tensor& wv = t.nodes_[wi].value;
    Tensor& gx = t.grad_buf(xi);
    Tensor& gw = t.grad_buf(wi);
    const double* xp = xv.data();
    const double* wp = wv.data();
    const double* gp = g.data();
    for (std::size_t b = 0; b < d.b; ++b) {
      for (std::size_t co = 0; co < d.co; ++co) {
        const double* gbase = gp + (b * d.co + co) * d.oh * d.ow;
        for (std::size_t ci = 0; ci < d.ci; ++ci) {
          const double* xbase = xp + (b * d.ci + ci) * d.h * d.w;
          double* gxbase = gx.data() + (b * d.ci + ci) * d.h * d.w;
          const double* wbase = wp + (co * d.ci + ci) * d.kh * d.kw;
          double* gwbase = gw.data() + (co * d.ci + ci) * d.kh * d.kw;
          for (std::size_t kh = 0; kh < d.kh; ++kh) {
            for (std::size_t kw = 0; kw < d.kw; ++kw) {
              const double wval = wbase[kh * d.kw + kw];
              double wacc = 0.0;
              std::size_t oh_lo, oh_hi, ow_lo, ow_hi;
              out_range(d.h, d.oh, kh, d.stride, d.pad, oh_lo, oh_hi);
              out_range(d.w, d.ow, kw, d.stride, d.pad, ow_lo, ow_hi);
              for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                const std::size_t ih = oh * d.stride + kh - d.pad;
                const double* xrow = xbase + ih * d.w;
                double* gxrow = gxbase + ih * d.w;
                const double* grow = gbase + oh * d.ow;
                for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                  const std::size_t iw = ow * d.stride + kw - d.pad;
                  gxrow[iw] += wval * grow[ow];
                  wacc += xrow[iw] * grow[ow];
                }
              }
              gwbase[kh * d.kw + kw] += wacc;
            }
          }
        }
      }
    }
  });
}

Var Tape::conv_transpose2d(Var x, Var w, int stride, int pad, int out_pad) {
  check_on_tape(x, "conv_transpose2d");
  check_on_tape(w, "conv_transpose2d");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  require(xv.rank() == 4,
          "conv_transpose2d: input must be [b,c,h,w], got " + shape_str(xv.shape()));
  require(wv.rank() == 4,
          "conv_transpose2d: weight must be [ci,co,kh,kw], got " + shape_str(wv.shape()));
  require(stride >= 1 && pad >= 0 && out_pad >= 0, "conv_transpose2d: bad stride/pad");
  const std::size_t b = xv.extent(0), ci = xv.extent(1), h = xv.extent(2), w_in = xv.extent(3);
  require(wv.extent(0) == ci, "conv_transpose2d: weight leading extent " +
                                  std::to_string(wv.extent(0)) + " != input channels " +
                                  std::to_string(ci));
  const std::size_t co = wv.extent(1), kh = wv.extent(2), kw = wv.extent(3);
  const std::size_t oh = conv_transpose_out_extent(h, kh, stride, pad, out_pad);
  const std::size_t ow = conv_transpose_out_extent(w_in, kw, stride, pad, out_pad);
  require(oh >= 1 && ow >= 1, "conv_transpose2d: non-positive output extent");
  Tensor out({b, co, oh, ow});
  const double* xp = xv.data();
  const double* wp = wv.data();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t c = 0; c < ci; ++c) {
      const double* xbase = xp + (bi * ci + c) * h * w_in;
      for (std::size_t o = 0; o < co; ++o) {
        double* obase = out.data() + (bi * co + o) * oh * ow;
        const double* wbase = wp + (c * co + o) * kh * kw;
        for (std::size_t ih = 0; ih < h; ++ih) {
          for (std::size_t ikh = 0; ikh < kh; ++ikh) {
            const long long toh = static_cast<long long>(ih) * stride + ikh - pad;
            if (toh < 0 || toh >= static_cast<long long>(oh)) continue;
            const double* xrow = xbase + ih * w_in;
            double* orow = obase + toh * ow;
            const double* wrow = wbase + ikh * kw;
            for (std::size_t iw = 0; iw < w_in; ++iw) {
              const double xval = xrow[iw];
              if (xval == 0.0) continue;
              for (std::size_t ikw = 0; ikw < kw; ++ikw) {
                const long long tow = static_cast<long long>(iw) * stride + ikw - pad;
                if (tow < 0 || tow >= static_cast<long long>(ow)) continue;
                orow[tow] += xval * wrow[ikw];
              }
            }
          }
        }
      }
    }
  }
  check_finite(out, "conv_transpose2d");
  const auto xi = x.id, wi = w.id;
  struct Dims {
    std::size_t b, ci, h, w, co, kh, kw, oh, ow;
    int stride, pad;
  } d{b, ci, h, w_in, co, kh, kw, oh, ow, stride, pad};
  return push(std::move(out), [xi, wi, d](Tape& t, const Tensor& g) {
    const Tensor& xv = t.nodes_[xi].value;
    const Tensor& wv = t.nodes_[wi].value;
    Tensor& gx = t.grad_buf(xi);
    Tensor& gw = t.grad_buf(wi);
    const double* xp = xv.data();
    const double* wp = wv.data();
    const double* gp = g.data();
    for (std::size_t bi = 0; bi < d.b; ++bi) {
      for (std::size_t c = 0; c < d.ci; ++c) {
        const double* xbase = xp + (bi * d.ci + c) * d.h * d.w;
        double* gxbase = gx.data() + (bi * d.ci + c) * d.h * d.w;
        for (std::size_t o = 0; o < d.co; ++o) {
          const double* gbase = gp + (bi * d.co + o) * d.oh * d.ow;
          const double* wbase = wp + (c * d.co + o) * d.kh * d.kw;
          double* gwbase = gw.data() + (c * d.co + o) * d.kh * d.kw;
          for (std::size_t ih = 0; ih < d.h; ++ih) {
            for (std::size_t ikh = 0; ikh < d.kh; ++ikh) {
              const long long toh = static_cast<long long>(ih) * d.stride + ikh - d.pad;
              if (toh < 0 || toh >= static_cast<long long>(d.oh)) continue;
              const double* xrow = xbase + ih * d.w;
              double* gxrow = gxbase + ih * d.w;
              const double* grow = gbase + toh * d.ow;
              const double* wrow = wbase + ikh * d.kw;
              double* gwrow = gwbase + ikh * d.kw;
              for (std::size_t iw = 0; iw < d.w; ++iw) {
                for (std::size_t ikw = 0; ikw < d.kw; ++ikw) {
                  const long long tow = static_cast<long long>(iw) * d.stride + ikw - d.pad;
                  if (tow < 0 || tow >= static_cast<long long>(d.ow)) continue;
                  gxrow[iw] += wrow[ikw] * grow[tow];
                  gwrow[ikw] += xrow[iw] * grow[tow];
                }
              }
            }
          }
        }
      }
    }
  });
}

Var Tape::channel_bias(Var x, Var b) {
  check_on_tape(x, "channel_bias");
  check_on_tape(b, "channel_bias");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& bv = nodes_[b.id].value;
  require(xv.rank() == 4, "channel_bias: input must be [b,c,h,w], got " + shape_str(xv.shape()));
  const std::size_t n = xv.extent(0), c = xv.extent(1), hw = xv.extent(2) * xv.extent(3);
  require(bv.size() == c, "channel_bias: bias shape " + shape_str(bv.shape()) +
                              " != channels " + std::to_string(c));
  Tensor out(xv.shape());
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double bias = bv[ci];
      const std::size_t base = (bi * c + ci) * hw;
      for (std::size_t i = 0; i < hw; ++i) out[base + i] = xv[base + i] + bias;
    }
  }
  check_finite(out, "channel_bias");
  const auto xi = x.id, bi2 = b.id;
  return push(std::move(out), [xi, bi2, n, c, hw](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buf(xi);
    Tensor& gb = t.grad_buf(bi2);
    for (std::size_t bi = 0; bi < n; ++bi) {
      for (std::size_t ci = 0; ci < c; ++ci) {
        const std::size_t base = (bi * c + ci) * hw;
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          gx[base + i] += g[base + i];
          acc += g[base + i];
        }
        gb[ci] += acc;
      }
    }
  });
}

Var Tape::global_avg_pool(Var x) {
  check_on_tape(x, "global_avg_pool");
  const Tensor& xv = nodes_[x.id].value;
  require(xv.rank() == 4, "global_avg_pool: input must be [b,c,h,w], got " +
                              shape_str(xv.shape()));
  const std::size_t b = xv.extent(0), c = xv.extent(1), hw = xv.extent(2) * xv.extent(3);
  require(hw >= 1, "global_avg_pool: spatial extents must be >= 1");
  const double inv = 1.0 / static_cast<double>(hw);
  Tensor out({b, c});
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const std::size_t base = (bi * c + ci) * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += xv[base + i];
      out[bi * c + ci] = acc * inv;
    }
  }
  check_finite(out, "global_avg_pool");
  const auto xi = x.id;
  return push(std::move(out), [xi, b, c, hw, inv](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t bi = 0; bi < b; ++bi) {
      for (std::size_t ci = 0; ci < c; ++ci) {
        const std::size_t base = (bi * c + ci) * hw;
        const double go = g[bi * c + ci] * inv;
        for (std::size_t i = 0; i < hw; ++i) gx[base + i] += go;
      }
    }
  });
}

namespace {

struct BnDims {
  std::size_t pre, c, post, count;  // reduce over pre (batch) and post (spatial)
};

BnDims bn_dims(const Tensor& x, const Tensor& gamma, const Tensor& beta, const char* op) {
  require(x.rank() >= 2, std::string(op) + ": input must be rank >= 2, got " +
                             shape_str(x.shape()));
  BnDims d{x.extent(0), x.extent(1), 1, 0};
  for (std::size_t i = 2; i < x.rank(); ++i) d.post *= x.extent(i);
  d.count = d.pre * d.post;
  require(gamma.size() == d.c && beta.size() == d.c,
          std::string(op) + ": gamma/beta must have one entry per channel (" +
              std::to_string(d.c) + "), got " + shape_str(gamma.shape()) + " and " +
              shape_str(beta.shape()));
  return d;
}

}  // namespace

Var Tape::batch_norm_train(Var x, Var gamma, Var beta, double eps, Tensor* batch_mean,
                           Tensor* batch_var) {
  check_on_tape(x, "batch_norm_train");
  check_on_tape(gamma, "batch_norm_train");
  check_on_tape(beta, "batch_norm_train");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& gv = nodes_[gamma.id].value;
  const Tensor& bv = nodes_[beta.id].value;
  const BnDims d = bn_dims(xv, gv, bv, "batch_norm_train");
  require(xv.extent(0) >= 2, "batch_norm_train: batch must be >= 2, got " +
                                 std::to_string(xv.extent(0)));
  Tensor mean({d.c});
  Tensor var({d.c});
  const double invn = 1.0 / static_cast<double>(d.count);
  for (std::size_t c = 0; c < d.c; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < d.pre; ++p) {
      const std::size_t base = (p * d.c + c) * d.post;
      for (std::size_t q = 0; q < d.post; ++q) acc += xv[base + q];
    }
    mean[c] = acc * invn;
    double vacc = 0.0;
    for (std::size_t p = 0; p < d.pre; ++p) {
      const std::size_t base = (p * d.c + c) * d.post;
      for (std::size_t q = 0; q < d.post; ++q) {
        const double dx = xv[base + q] - mean[c];
        vacc += dx * dx;
      }
    }
    var[c] = vacc * invn;
  }
  Tensor inv_std({d.c});
  for (std::size_t c = 0; c < d.c; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (std::size_t p = 0; p < d.pre; ++p) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const std::size_t base = (p * d.c + c) * d.post;
      for (std::size_t q = 0; q < d.post; ++q) {
        const double h = (xv[base + q] - mean[c]) * inv_std[c];
        xhat[base + q] = h;
        out[base + q] = gv[c] * h + bv[c];
      }
    }
  }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  check_finite(out, "batch_norm_train");
  const auto xi = x.id, gi = gamma.id, bi = beta.id;
  return push(std::move(out),
              [xi, gi, bi, d, invn, inv_std = std::move(inv_std),
               xhat = std::move(xhat)](Tape& t, const Tensor& g) {
                const Tensor& gv = t.nodes_[gi].value;
                Tensor& gx = t.grad_buf(xi);
                Tensor& gg = t.grad_buf(gi);
                Tensor& gb = t.grad_buf(bi);
                for (std::size_t c = 0; c < d.c; ++c) {
                  double sum_g = 0.0, sum_gh = 0.0;
                  for (std::size_t p = 0; p < d.pre; ++p) {
                    const std::size_t base = (p * d.c + c) * d.post;
                    for (std::size_t q = 0; q < d.post; ++q) {
                      sum_g += g[base + q];
                      sum_gh += g[base + q] * xhat[base + q];
                    }
                  }
                  gb[c] += sum_g;
                  gg[c] += sum_gh;
                  const double k = gv[c] * inv_std[c];
                  const double mg = sum_g * invn;
                  const double mgh = sum_gh * invn;
                  for (std::size_t p = 0; p < d.pre; ++p) {
                    const std::size_t base = (p * d.c + c) * d.post;
                    for (std::size_t q = 0; q < d.post; ++q) {
                      gx[base + q] += k * (g[base + q] - mg - xhat[base + q] * mgh);
                    }
                  }
                }
              });
}

Var Tape::batch_norm_infer(Var x, Var gamma, Var beta, const Tensor& running_mean,
                           const Tensor& running_var, double eps) {
  check_on_tape(x, "batch_norm_infer");
  check_on_tape(gamma, "batch_norm_infer");
  check_on_tape(beta, "batch_norm_infer");
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& gv = nodes_[gamma.id].value;
  const Tensor& bv = nodes_[beta.id].value;
  const BnDims d = bn_dims(xv, gv, bv, "batch_norm_infer");
  require(running_mean.size() == d.c && running_var.size() == d.c,
          "batch_norm_infer: running stats must have one entry per channel");
  Tensor inv_std({d.c});
  for (std::size_t c = 0; c < d.c; ++c) {
    require(running_var[c] >= 0.0, "batch_norm_infer: negative running variance");
    inv_std[c] = 1.0 / std::sqrt(running_var[c] + eps);
  }
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (std::size_t p = 0; p < d.pre; ++p) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const std::size_t base = (p * d.c + c) * d.post;
      for (std::size_t q = 0; q < d.post; ++q) {
        const double h = (xv[base + q] - running_mean[c]) * inv_std[c];
        xhat[base + q] = h;
        out[base + q] = gv[c] * h + bv[c];
      }
    }
  }
  check_finite(out, "batch_norm_infer");
  const auto xi = x.id, gi = gamma.id, bi = beta.id;
  return push(std::move(out),
              [xi, gi, bi, d, inv_std = std::move(inv_std), xhat = std::move(xhat)](
                  Tape& t, const Tensor& g) {
                const Tensor& gv = t.nodes_[gi].value;
                Tensor& gx = t.grad_buf(xi);
                Tensor& gg = t.grad_buf(gi);
                Tensor& gb = t.grad_buf(bi);
                for (std::size_t c = 0; c < d.c; ++c) {
                  const double k = gv[c] * inv_std[c];
                  for (std::size_t p = 0; p < d.pre; ++p) {
                    const std::size_t base = (p * d.c + c) * d.post;
                    for (std::size_t q = 0; q < d.post; ++q) {
                      gx[base + q] += k * g[base + q];
                      gg[c] += g[base + q] * xhat[base + q];
                      gb[c] += g[base + q];
                    }
                  }
                }
              });
}

}  // namespace mrgan
