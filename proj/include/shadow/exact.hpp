#pragma once

// Exact nonnegative reals of the form r^(1/k) with r rational.
//
// Rational values (k == 1) cover every distance, tolerance and constant used
// by the shift systems. Radicals appear only through snowflaked metrics; they
// multiply, divide and compare exactly. Addition is exact when the result is
// again of this form; the strict triangle-inequality test on radicals goes
// through le_sum, which refines rational enclosures.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shadow {

using Rational = mpq_class;
using Integer = mpz_class;

class ExactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Rational ipow(const Rational& base, unsigned long e) {
  Integer n, d;
  mpz_pow_ui(n.get_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(d.get_mpz_t(), base.get_den_mpz_t(), e);
  Rational out(n, d);
  out.canonicalize();
  return out;
}

// k-th root of r when r is a perfect k-th power of a rational.
inline std::optional<Rational> exact_root(const Rational& r, unsigned long k) {
  if (k == 1) return r;
  Integer n, d;
  if (mpz_root(n.get_mpz_t(), r.get_num_mpz_t(), k) == 0) return std::nullopt;
  if (mpz_root(d.get_mpz_t(), r.get_den_mpz_t(), k) == 0) return std::nullopt;
  Rational out(n, d);
  out.canonicalize();
  return out;
}

inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  while (!s.empty() && s.back() == ' ') s.pop_back();
  if (s.empty()) throw ExactError("empty rational literal");
  for (char c : s) {
    if (!(c == '/' || c == '-' || (c >= '0' && c <= '9'))) {
      throw ExactError("malformed rational literal '" + s + "'");
    }
  }
  Rational q;
  if (q.set_str(s, 10) != 0) throw ExactError("malformed rational literal '" + s + "'");
  if (q.get_den() == 0) throw ExactError("zero denominator in '" + s + "'");
  q.canonicalize();
  return q;
}

inline std::string rational_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

}  // namespace detail

class ExactReal {
 public:
  ExactReal() : radicand_(0), root_(1) {}
  ExactReal(long v) : radicand_(v), root_(1) { check_sign(); }  // NOLINT
  ExactReal(const Rational& q) : radicand_(q), root_(1) {        // NOLINT
    radicand_.canonicalize();
    check_sign();
  }
  ExactReal(long num, long den) : radicand_(num, den), root_(1) {
    if (den == 0) throw ExactError("zero denominator");
    radicand_.canonicalize();
    check_sign();
  }

  /// r^(1/k)
  static ExactReal radical(const Rational& r, unsigned long k) {
    if (k == 0) throw ExactError("root index must be positive");
    ExactReal out;
    out.radicand_ = r;
    out.radicand_.canonicalize();
    out.root_ = k;
    out.check_sign();
    out.normalize();
    return out;
  }

  static ExactReal parse(std::string_view text) {
    auto caret = text.find("^(1/");
    if (caret == std::string_view::npos) return ExactReal(detail::parse_rational(text));
    auto close = text.find(')', caret);
    if (close == std::string_view::npos) throw ExactError("malformed radical literal");
    auto k = std::stoul(std::string(text.substr(caret + 4, close - caret - 4)));
    return radical(detail::parse_rational(text.substr(0, caret)), k);
  }

  bool is_rational() const { return root_ == 1; }
  bool is_zero() const { return radicand_ == 0; }
  const Rational& radicand() const { return radicand_; }
  unsigned long root_index() const { return root_; }

  const Rational& rational() const {
    if (!is_rational()) throw ExactError("value " + str() + " is not rational");
    return radicand_;
  }

  std::string str() const {
    if (root_ == 1) return detail::rational_string(radicand_);
    return detail::rational_string(radicand_) + "^(1/" + std::to_string(root_) + ")";
  }

  /// Rational enclosure [lo, hi] of the value with hi - lo <= 2^-bits.
  std::pair<Rational, Rational> enclose(unsigned long bits) const {
    if (root_ == 1) return {radicand_, radicand_};
    // (n/d)^(1/k) = (n d^(k-1))^(1/k) / d
    Integer scaled;
    Integer dpow;
    mpz_pow_ui(dpow.get_mpz_t(), radicand_.get_den_mpz_t(), root_ - 1);
    scaled = radicand_.get_num() * dpow;
    mpz_mul_2exp(scaled.get_mpz_t(), scaled.get_mpz_t(), bits * root_);
    Integer fl;
    mpz_root(fl.get_mpz_t(), scaled.get_mpz_t(), root_);
    Integer denom = radicand_.get_den();
    mpz_mul_2exp(denom.get_mpz_t(), denom.get_mpz_t(), bits);
    Rational lo(fl, denom), hi(fl + 1, denom);
    lo.canonicalize();
    hi.canonicalize();
    return {lo, hi};
  }

  friend std::strong_ordering operator<=>(const ExactReal& a, const ExactReal& b) {
    if (a.root_ == b.root_) return cmp3(a.radicand_, b.radicand_);
    const unsigned long l = std::lcm(a.root_, b.root_);
    return cmp3(detail::ipow(a.radicand_, l / a.root_), detail::ipow(b.radicand_, l / b.root_));
  }
  friend bool operator==(const ExactReal& a, const ExactReal& b) {
    return a.root_ == b.root_ && a.radicand_ == b.radicand_;
  }

  friend ExactReal operator*(const ExactReal& a, const ExactReal& b) {
    if (a.root_ == 1 && b.root_ == 1) return ExactReal(Rational(a.radicand_ * b.radicand_));
    const unsigned long l = std::lcm(a.root_, b.root_);
    return radical(detail::ipow(a.radicand_, l / a.root_) * detail::ipow(b.radicand_, l / b.root_), l);
  }
  friend ExactReal operator/(const ExactReal& a, const ExactReal& b) {
    if (b.is_zero()) throw ExactError("division by zero");
    if (a.root_ == 1 && b.root_ == 1) return ExactReal(Rational(a.radicand_ / b.radicand_));
    const unsigned long l = std::lcm(a.root_, b.root_);
    return radical(detail::ipow(a.radicand_, l / a.root_) / detail::ipow(b.radicand_, l / b.root_), l);
  }

  // Sum is exact when both terms are rational multiples of a common radical.
  friend ExactReal operator+(const ExactReal& a, const ExactReal& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.root_ == 1 && b.root_ == 1) return ExactReal(Rational(a.radicand_ + b.radicand_));
    const ExactReal ratio = a / b;
    if (!ratio.is_rational()) {
      throw ExactError("sum " + a.str() + " + " + b.str() + " is not representable");
    }
    return b * ExactReal(Rational(ratio.radicand_ + 1));
  }

  // Nonnegative difference; a < b is an error.
  friend ExactReal operator-(const ExactReal& a, const ExactReal& b) {
    if (a < b) throw ExactError("negative difference " + a.str() + " - " + b.str());
    if (b.is_zero()) return a;
    if (a.root_ == 1 && b.root_ == 1) return ExactReal(Rational(a.radicand_ - b.radicand_));
    const ExactReal ratio = a / b;
    if (!ratio.is_rational()) {
      throw ExactError("difference " + a.str() + " - " + b.str() + " is not representable");
    }
    return b * ExactReal(Rational(ratio.radicand_ - 1));
  }

  ExactReal& operator+=(const ExactReal& o) { return *this = *this + o; }
  ExactReal& operator*=(const ExactReal& o) { return *this = *this * o; }

 private:
  static std::strong_ordering cmp3(const Rational& a, const Rational& b) {
    const int c = cmp(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  void check_sign() const {
    if (sgn(radicand_) < 0) throw ExactError("ExactReal must be nonnegative");
  }

  void normalize() {
    if (radicand_ == 0 || radicand_ == 1) {
      root_ = 1;
      return;
    }
    unsigned long k = root_;
    for (unsigned long p = 2; p <= k; ++p) {
      while (k % p == 0) {
        auto r = detail::exact_root(radicand_, p);
        if (!r) break;
        radicand_ = *r;
        k /= p;
      }
    }
    root_ = k;
  }

  Rational radicand_;
  unsigned long root_;
};

/// a^(num/den) for a rational exponent in (0, 1] or any positive integer.
inline std::ostream& operator<<(std::ostream& os, const ExactReal& r) { return os << r.str(); }

inline ExactReal pow(const ExactReal& a, unsigned long num, unsigned long den) {
  if (num == 0 || den == 0) throw ExactError("exponent must be a positive rational");
  return ExactReal::radical(detail::ipow(a.radicand(), num), a.root_index() * den);
}

/// a^p for integer p (negative allowed, a > 0 then).
inline ExactReal ipow(const ExactReal& a, long p) {
  if (p >= 0) {
    if (p == 0) return ExactReal(1);
    return pow(a, static_cast<unsigned long>(p), 1);
  }
  return ExactReal(1) / pow(a, static_cast<unsigned long>(-p), 1);
}

inline const ExactReal& max(const ExactReal& a, const ExactReal& b) { return a < b ? b : a; }
inline const ExactReal& min(const ExactReal& a, const ExactReal& b) { return b < a ? b : a; }

/// u <= v + w, decided exactly.
inline bool le_sum(const ExactReal& u, const ExactReal& v, const ExactReal& w) {
  try {
    return u <= v + w;
  } catch (const ExactError&) {
  }
  // v/w is irrational here. Refine enclosures until they separate; an
  // exact tie in this branch is reported as an error rather than guessed.
  for (unsigned long bits = 32; bits <= 8192; bits *= 2) {
    auto [ulo, uhi] = u.enclose(bits);
    auto [vlo, vhi] = v.enclose(bits);
    auto [wlo, whi] = w.enclose(bits);
    if (uhi <= vlo + wlo) return true;
    if (ulo > vhi + whi) return false;
  }
  throw ExactError("could not separate " + u.str() + " from " + v.str() + " + " + w.str());
}

/// For alpha > 1 and 0 < delta < 1: the N >= 0 with alpha^(-N-1) <= delta < alpha^(-N).
inline long scale_index(const ExactReal& alpha, const ExactReal& delta) {
  if (!(alpha > ExactReal(1))) throw ExactError("alpha must exceed 1");
  if (delta.is_zero() || delta >= ExactReal(1)) throw ExactError("delta must lie in (0, 1)");
  long n = 0;
  ExactReal upper(1);  // alpha^-n
  while (true) {
    ExactReal lower = upper / alpha;
    if (lower <= delta && delta < upper) return n;
    upper = lower;
    ++n;
  }
}

}  // namespace shadow
