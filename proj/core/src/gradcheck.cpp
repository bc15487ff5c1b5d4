#include "mrgan/gradcheck.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

double eval_scalar(const ScalarFn& fn, const Tensor& point) {
  Tape tape;
  Var x = tape.leaf(point);
  Var y = fn(tape, x);
  const Tensor& yv = tape.value(y);
  require(yv.rank() == 0, "gradient_check: fn must return a scalar of shape [], got " +
                              shape_str(yv.shape()));
  return yv.item();
}

}  // namespace

GradCheckReport gradient_check(const ScalarFn& fn, const Tensor& point, double step,
                               double tolerance) {
  require(step > 0.0, "gradient_check: step must be positive");
  Tape tape;
  Var x = tape.leaf(point);
  Var y = fn(tape, x);
  const Tensor& yv = tape.value(y);
  require(yv.rank() == 0, "gradient_check: fn must return a scalar of shape [], got " +
                              shape_str(yv.shape()));
  tape.backward(y);
  const Tensor analytic = tape.grad(x);

  GradCheckReport report;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double fp = eval_scalar(fn, probe);
    probe[i] = saved - step;
    const double fm = eval_scalar(fn, probe);
    probe[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom =
        std::max({1e-8, std::fabs(numeric), std::fabs(analytic[i])});
    const double rel = std::fabs(numeric - analytic[i]) / denom;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
  }
  report.pass = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace mrgan
