#pragma once

#include <compare>
#include <functional>
#include <string>

#include "shadow/exact.hpp"

namespace shadow {

/// Point of the circle of circumference 1, stored as a rational angle in [0, 1).
class CirclePoint {
 public:
  CirclePoint() = default;
  explicit CirclePoint(Rational angle) : angle_(std::move(angle)) { reduce(); }
  CirclePoint(long num, long den) : CirclePoint(Rational(num, den)) {}

  const Rational& angle() const { return angle_; }
  std::string str() const { return detail::rational_string(angle_); }

  friend bool operator==(const CirclePoint& a, const CirclePoint& b) { return a.angle_ == b.angle_; }
  friend std::strong_ordering operator<=>(const CirclePoint& a, const CirclePoint& b) {
    const int c = cmp(a.angle_, b.angle_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  void reduce() {
    angle_.canonicalize();
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), angle_.get_num_mpz_t(), angle_.get_den_mpz_t());
    angle_ -= fl;
  }

  Rational angle_{0};
};

inline ExactReal arc_distance(const CirclePoint& a, const CirclePoint& b) {
  Rational diff = a.angle() - b.angle();
  if (sgn(diff) < 0) diff = -diff;
  Rational other = 1 - diff;
  return ExactReal(diff < other ? diff : other);
}

}  // namespace shadow

template <>
struct std::hash<shadow::CirclePoint> {
  std::size_t operator()(const shadow::CirclePoint& p) const noexcept {
    return std::hash<std::string>{}(p.str());
  }
};
