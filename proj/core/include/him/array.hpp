#ifndef HIM_ARRAY_HPP
#define HIM_ARRAY_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace him {

/// Error type for contract, dimension and domain violations.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. The universal value type of the
/// differentiation graph, parameter store and checkpoint payloads.
struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(Shape s) : shape(std::move(s)), data(static_cast<size_t>(numel_of(shape)), 0.0) {}
  Array(Shape s, std::vector<double> d);

  static Array zeros(Shape s) { return Array(std::move(s)); }
  static Array full(Shape s, double v);
  static Array scalar(double v);
  static Array vec(std::vector<double> d);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  int rows() const;
  int cols() const;
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }
  std::span<const double> view() const { return {data.data(), data.size()}; }

  bool all_finite() const;
};

void require(bool cond, const std::string& msg);

}  // namespace him

#endif
