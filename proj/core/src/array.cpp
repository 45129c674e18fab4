#include "him/array.hpp"

#include <cmath>
#include <sstream>

namespace him {

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) {
    require(d >= 0, "negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Array::Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  require(static_cast<int64_t>(data.size()) == numel_of(shape),
          "data length does not match shape " + shape_str(shape));
}

Array Array::full(Shape s, double v) {
  Array a(std::move(s));
  for (double& x : a.data) x = v;
  return a;
}

Array Array::scalar(double v) { return Array({1}, {v}); }

Array Array::vec(std::vector<double> d) {
  int n = static_cast<int>(d.size());
  return Array({n}, std::move(d));
}

int Array::rows() const {
  require(rank() == 2, "rows(): array is not 2-D, shape " + shape_str(shape));
  return shape[0];
}

int Array::cols() const {
  require(rank() == 2, "cols(): array is not 2-D, shape " + shape_str(shape));
  return shape[1];
}

bool Array::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace him
