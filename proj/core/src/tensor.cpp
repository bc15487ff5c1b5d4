#include "mrgan/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "mrgan/errors.hpp"

namespace mrgan {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), v_(numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), v_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), v_(std::move(values)) {
  require(v_.size() == numel(shape_), "Tensor: value count " + std::to_string(v_.size()) +
                                          " does not match shape " + shape_str(shape_));
}

Tensor Tensor::vector(std::initializer_list<double> v) {
  return Tensor({v.size()}, std::vector<double>(v));
}

double Tensor::item() const {
  require(v_.size() == 1, "Tensor::item: tensor has " + std::to_string(v_.size()) + " elements");
  return v_[0];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  require(rank() == 2, "Tensor::at(i,j) on rank-" + std::to_string(rank()) + " tensor");
  return v_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  require(rank() == 2, "Tensor::at(i,j) on rank-" + std::to_string(rank()) + " tensor");
  return v_[i * shape_[1] + j];
}

void Tensor::fill(double v) { std::fill(v_.begin(), v_.end(), v); }

bool Tensor::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape new_shape) const {
  require(numel(new_shape) == v_.size(), "Tensor::reshaped: cannot view " + shape_str(shape_) +
                                             " as " + shape_str(new_shape));
  return Tensor(std::move(new_shape), v_);
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require(same_shape(a.shape(), b.shape()),
          "tensor +: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require(same_shape(a.shape(), b.shape()),
          "tensor -: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!same_shape(a.shape(), b.shape())) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace mrgan
