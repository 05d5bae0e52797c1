#include "tote/core/rng.hpp"

#include <cmath>

namespace tote {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 1e-300);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double Rng::truncated_normal(double stddev) {
  for (;;) {
    const double z = normal();
    if (std::fabs(z) <= 2.0) return z * stddev;
  }
}

uint64_t Rng::derive(uint64_t base, uint64_t index) {
  Rng r(base ^ (0x9E3779B97F4A7C15ull * (index + 1)));
  return r.next_u64();
}

}  // namespace tote
