#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mrgan {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

// Dense row-major tensor of doubles. Plain value type; autodiff identity
// (node ids) lives on the Tape, not here.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, double fill);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor vector(std::initializer_list<double> v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return v_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  // Scalar access; requires size() == 1.
  double item() const;

  // Indexed access for low-rank tensors (tests and glue code).
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;

  void fill(double v);
  bool all_finite() const;

  Tensor reshaped(Shape new_shape) const;

 private:
  Shape shape_;
  std::vector<double> v_;
};

// Elementwise helpers on raw tensors (no tape participation).
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace mrgan
