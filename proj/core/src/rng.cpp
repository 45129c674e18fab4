#include "him/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "him/array.hpp"

namespace him {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int64_t Rng::below(int64_t n) {
  require(n > 0, "Rng::below: bound must be positive");
  uint64_t bound = static_cast<uint64_t>(n);
  uint64_t threshold = (0ULL - bound) % bound;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return static_cast<int64_t>(r % bound);
  }
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::restore_state(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  require(!is.fail(), "Rng::restore_state: malformed state string");
}

}  // namespace him
