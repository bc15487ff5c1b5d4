#include <cmath>
#include <cstdio>
#include "mrgan/gradcheck.hpp"
#include "mrgan/tape.hpp"
using namespace mrgan;

int main() {
  // f(x)=x^2 at 3 -> grad 6
  {
    Tape t;
    Var x = t.leaf(Tensor::scalar(3.0));
    Var y = t.mul(x, x);
    t.backward(y);
    std::printf("x^2 grad: %.17g\n", t.grad(x).item());
  }
  // logsumexp (1,2,3)
  {
    Tape t;
    Var x = t.leaf(Tensor::vector({1, 2, 3}));
    Var y = t.logsumexp(x, 0);
    std::printf("lse(1,2,3): %.10f\n", t.value(y).item());
    t.backward(y);
    std::printf("lse grad: %.6f %.6f %.6f (sum=%.12f)\n", t.grad(x)[0], t.grad(x)[1],
                t.grad(x)[2], t.grad(x)[0] + t.grad(x)[1] + t.grad(x)[2]);
  }
  // gradient check through a small composite: sum of squares + tanh + matmul + conv
  {
    Rng rng(7);
    Tensor x({2, 3, 5, 5});
    for (auto& v : x.values()) v = rng.gaussian() * 0.5;
    Tensor w({4, 3, 3, 3});
    for (auto& v : w.values()) v = rng.gaussian() * 0.3;
    auto fn = [&](Tape& t, Var in) {
      Var wv = t.leaf(w);
      Var c = t.conv2d(in, wv, 2, 1);
      Var h = t.tanh(c);
      Var p = t.global_avg_pool(h);
      return t.l2_norm_sq(p);
    };
    auto rep = gradient_check(fn, x, 1e-5, 1e-6);
    std::printf("conv gradcheck: max_rel=%.3g pass=%d\n", rep.max_relative_error, rep.pass);
  }
  // conv_transpose adjointness: <conv(x,W), y> == <x, convT(y,W)>
  {
    Rng rng(11);
    Tensor x({1, 3, 6, 6}), w({5, 3, 3, 3});
    for (auto& v : x.values()) v = rng.gaussian();
    for (auto& v : w.values()) v = rng.gaussian();
    Tape t;
    Var xv = t.leaf(x), wv = t.leaf(w);
    Var cx = t.conv2d(xv, wv, 2, 1);
    Tensor y(t.value(cx).shape());
    for (auto& v : y.values()) v = rng.gaussian();
    Var yv = t.leaf(y);
    Var ct = t.conv_transpose2d(yv, wv, 2, 1, 1);
    double lhs = dot(t.value(cx), y);
    double rhs = dot(t.value(ct), x);
    std::printf("adjoint: lhs=%.12g rhs=%.12g (convT out %s)\n", lhs, rhs,
                shape_str(t.value(ct).shape()).c_str());
  }
  // weight_norm gradcheck
  {
    Rng rng(13);
    Tensor v({4, 6});
    for (auto& z : v.values()) z = rng.gaussian();
    Tensor m({4, 6});
    for (auto& z : m.values()) z = rng.gaussian();
    auto fn = [&](Tape& t, Var in) {
      Var g = t.leaf(Tensor({4}, 1.3));
      Var w = t.weight_norm(in, g);
      Var d = t.sub(w, t.leaf(m));
      return t.l2_norm_sq(d);
    };
    auto rep = gradient_check(fn, v, 1e-6, 1e-6);
    std::printf("wn gradcheck: max_rel=%.3g pass=%d\n", rep.max_relative_error, rep.pass);
  }
  // batch_norm gradcheck
  {
    Rng rng(17);
    Tensor x({4, 3, 2, 2});
    for (auto& z : x.values()) z = rng.gaussian();
    auto fn = [&](Tape& t, Var in) {
      Var g = t.leaf(Tensor({3}, 1.1));
      Var b = t.leaf(Tensor({3}, -0.2));
      Var y = t.batch_norm_train(in, g, b, 1e-5);
      return t.l1_norm(y);
    };
    auto rep = gradient_check(fn, x, 1e-6, 1e-5);
    std::printf("bn gradcheck: max_rel=%.3g pass=%d\n", rep.max_relative_error, rep.pass);
  }
  return 0;
}
