#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "convexcert/ops.hpp"
#include "convexcert/rational.hpp"

namespace convexcert {

/// Thrown when an interval intersection is empty, e.g. for contradictory
/// assumptions.
struct EmptyDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extended-real interval with tracked endpoint openness. Endpoint arithmetic
/// rounds outward whenever a floating-point result is inexact, so exact
/// endpoints such as 0 and 1 survive untouched.
///
/// For scalar nodes the interval bounds the value, for vectors it bounds every
/// entry, and for matrices only the sign information is meaningful: a subset of
/// [0,inf) encodes psd and a subset of (-inf,0] encodes nsd.
struct Interval {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  double lo = -kInf;
  double hi = kInf;
  bool lo_open = true;
  bool hi_open = true;

  Interval() = default;
  Interval(double l, double h, bool lopen = false, bool hopen = false);

  static Interval entire() { return {}; }
  static Interval point(double v) { return {v, v}; }
  static Interval point(const Rational& r);
  static Interval nonneg() { return {0.0, kInf, false, true}; }
  static Interval positive() { return {0.0, kInf, true, true}; }
  static Interval nonpos() { return {-kInf, 0.0, true, false}; }
  static Interval negative() { return {-kInf, 0.0, true, true}; }

  bool is_entire() const { return lo == -kInf && hi == kInf; }
  bool is_point() const { return lo == hi; }
  bool is_nonneg() const { return lo >= 0.0; }
  bool is_nonpos() const { return hi <= 0.0; }
  bool is_positive() const { return lo > 0.0 || (lo == 0.0 && lo_open); }
  bool is_negative() const { return hi < 0.0 || (hi == 0.0 && hi_open); }
  bool excludes_zero() const { return is_positive() || is_negative(); }
  bool contains(double v) const;
  bool subset_of(const Interval& other) const;

  /// Intersection; throws EmptyDomain when the result is empty.
  Interval intersect(const Interval& other) const;

  /// Collapses to the psd/nsd/zero/unknown encoding used for matrices.
  Interval sign_only() const;

  std::string str() const;
  friend bool operator==(const Interval& a, const Interval& b) = default;
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
/// Division; a divisor that straddles 0 widens to the entire line.
Interval operator/(const Interval& a, const Interval& b);

Interval interval_pow(const Interval& base, const Rational& exponent);


/// Image of an elementwise elementary function over an interval; arguments
/// outside the function's domain are clipped to it.
Interval interval_fn(FnKind fn, const Interval& arg);
/// Domain restriction an elementary function imposes on its argument, or the
/// entire line when it imposes none.
Interval fn_domain(FnKind fn);

/// Bound on sum(v) for a vector with entries in `entries` and unknown
/// length n >= 1.
Interval interval_sum(const Interval& entries);

}  // namespace convexcert
