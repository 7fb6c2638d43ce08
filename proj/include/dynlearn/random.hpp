#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dynlearn {

// Seeded draws with fully pinned output: mt19937_64 for bits, Box-Muller for
// normals. std::normal_distribution is implementation-defined, so normals are
// produced here instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dynlearn
