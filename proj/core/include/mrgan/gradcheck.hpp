#pragma once

#include <functional>

#include "mrgan/tape.hpp"

namespace mrgan {

// Builds a scalar-valued function of one tensor input on a fresh tape.
// Must be deterministic: it is evaluated many times at perturbed points.
using ScalarFn = std::function<Var(Tape&, Var)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

// Compares reverse-mode gradients against central finite differences,
// coordinate by coordinate. Relative error uses an absolute floor of 1e-8 in
// the denominator so that near-zero gradients do not blow up the ratio.
GradCheckReport gradient_check(const ScalarFn& fn, const Tensor& point, double step,
                               double tolerance);

}  // namespace mrgan
