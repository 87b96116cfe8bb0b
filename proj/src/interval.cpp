#include "convexcert/interval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace convexcert {
namespace {

constexpr double kInf = Interval::kInf;

double down(double v) { return std::isfinite(v) ? std::nextafter(v, -kInf) : v; }
double up(double v) { return std::isfinite(v) ? std::nextafter(v, kInf) : v; }

// Sum rounded toward -inf / +inf using the TwoSum error term.
double add_rounded(double a, double b, bool toward_up) {
  double s = a + b;
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(s)) return s;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  if (toward_up) return err > 0 ? up(s) : s;
  return err < 0 ? down(s) : s;
}

// Product rounded outward using the FMA residual. 0*inf is taken as 0.
double mul_rounded(double a, double b, bool toward_up) {
  if (a == 0.0 || b == 0.0) return 0.0;
  double p = a * b;
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(p)) return p;
  double err = std::fma(a, b, -p);
  if (toward_up) return err > 0 ? up(p) : p;
  return err < 0 ? down(p) : p;
}

// Rounds a transcendental result outward unless it is one of the exact
// anchor values (0, +-1, +-inf).
double nudge(double v, bool toward_up) {
  if (v == 0.0 || v == 1.0 || v == -1.0 || !std::isfinite(v)) return v;
  return toward_up ? up(up(v)) : down(down(v));
}

struct Corner {
  double value;
  bool open;
};

Corner corner_mul(double x, bool xo, double y, bool yo, bool toward_up) {
  bool exact_zero = (x == 0.0 && !xo) || (y == 0.0 && !yo);
  return {mul_rounded(x, y, toward_up), (xo || yo) && !exact_zero};
}

bool never_exact(double) { return false; }

// Monotone image of an increasing function. `exact(v)` says f(v) needs no
// outward rounding.
template <class F, class E = bool (*)(double)>
Interval increasing(const Interval& a, F f, E exact = never_exact) {
  auto at = [&](double v, bool toward_up) { return exact(v) ? f(v) : nudge(f(v), toward_up); };
  double lo = a.lo == -kInf ? f(-kInf) : at(a.lo, false);
  double hi = a.hi == kInf ? f(kInf) : at(a.hi, true);
  return {lo, hi, a.lo_open || !std::isfinite(lo), a.hi_open || !std::isfinite(hi)};
}

template <class F, class E = bool (*)(double)>
Interval decreasing(const Interval& a, F f, E exact = never_exact) {
  auto at = [&](double v, bool toward_up) { return exact(v) ? f(v) : nudge(f(v), toward_up); };
  double lo = at(a.hi, false);
  double hi = at(a.lo, true);
  return {lo, hi, a.hi_open || !std::isfinite(lo), a.lo_open || !std::isfinite(hi)};
}

// Whether v^n is exactly representable for an integer n: integer bases with a
// result below 2^53, and reciprocals of such results that are powers of two.
bool exact_integer_power(double v, const Rational& n) {
  if (!std::isfinite(v) || v == 0.0 || v != std::trunc(v)) return v == 0.0;
  double m = std::pow(std::abs(v), std::abs(n.to_double()));
  if (m >= 9007199254740992.0) return false;
  if (n.sign() > 0) return true;
  int ex;
  return std::frexp(m, &ex) == 0.5;
}

// Clip to a domain without throwing; outside the domain the function is
// undefined, so an empty overlap yields the entire line.
std::optional<Interval> clip(const Interval& a, const Interval& domain) {
  try {
    return a.intersect(domain);
  } catch (const EmptyDomain&) {
    return std::nullopt;
  }
}

}  // namespace

Interval::Interval(double l, double h, bool lopen, bool hopen) : lo(l), hi(h), lo_open(lopen), hi_open(hopen) {
  if (std::isnan(l) || std::isnan(h)) {
    lo = -kInf;
    hi = kInf;
    lo_open = hi_open = true;
    return;
  }
  lo += 0.0;  // -0 becomes +0
  hi += 0.0;
  if (lo == -kInf) lo_open = true;
  if (hi == kInf) hi_open = true;
  if (lo > hi || (lo == hi && (lo_open || hi_open))) throw EmptyDomain("empty interval " + str());
}

Interval Interval::point(const Rational& r) {
  double v = r.to_double();
  std::int64_t d = r.den();
  bool dyadic = (d & (d - 1)) == 0;
  std::int64_t n = r.num() < 0 ? -r.num() : r.num();
  if (dyadic && n < (std::int64_t{1} << 53)) return point(v);
  return {down(v), up(v)};
}

bool Interval::contains(double v) const {
  bool above = v > lo || (v == lo && !lo_open);
  bool below = v < hi || (v == hi && !hi_open);
  return above && below;
}

bool Interval::subset_of(const Interval& o) const {
  bool lo_ok = lo > o.lo || (lo == o.lo && (lo_open || !o.lo_open));
  bool hi_ok = hi < o.hi || (hi == o.hi && (hi_open || !o.hi_open));
  return lo_ok && hi_ok;
}

Interval Interval::intersect(const Interval& o) const {
  double l, h;
  bool lo_o, hi_o;
  if (lo > o.lo) {
    l = lo;
    lo_o = lo_open;
  } else if (lo < o.lo) {
    l = o.lo;
    lo_o = o.lo_open;
  } else {
    l = lo;
    lo_o = lo_open || o.lo_open;
  }
  if (hi < o.hi) {
    h = hi;
    hi_o = hi_open;
  } else if (hi > o.hi) {
    h = o.hi;
    hi_o = o.hi_open;
  } else {
    h = hi;
    hi_o = hi_open || o.hi_open;
  }
  if (l > h || (l == h && (lo_o || hi_o)))
    throw EmptyDomain("empty intersection of " + str() + " and " + o.str());
  return {l, h, lo_o, hi_o};
}

Interval Interval::sign_only() const {
  if (lo == 0.0 && hi == 0.0) return point(0.0);
  if (is_nonneg()) return nonneg();
  if (is_nonpos()) return nonpos();
  return entire();
}

std::string Interval::str() const {
  auto fmt = [](double v) {
    if (v == kInf) return std::string("inf");
    if (v == -kInf) return std::string("-inf");
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };
  return std::string(lo_open ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + (hi_open ? ")" : "]");
}

Interval operator+(const Interval& a, const Interval& b) {
  return {add_rounded(a.lo, b.lo, false), add_rounded(a.hi, b.hi, true), a.lo_open || b.lo_open,
          a.hi_open || b.hi_open};
}

Interval operator-(const Interval& a) { return {-a.hi, -a.lo, a.hi_open, a.lo_open}; }

Interval operator-(const Interval& a, const Interval& b) { return a + (-b); }

Interval operator*(const Interval& a, const Interval& b) {
  Corner lows[4] = {corner_mul(a.lo, a.lo_open, b.lo, b.lo_open, false),
                    corner_mul(a.lo, a.lo_open, b.hi, b.hi_open, false),
                    corner_mul(a.hi, a.hi_open, b.lo, b.lo_open, false),
                    corner_mul(a.hi, a.hi_open, b.hi, b.hi_open, false)};
  Corner highs[4] = {corner_mul(a.lo, a.lo_open, b.lo, b.lo_open, true),
                     corner_mul(a.lo, a.lo_open, b.hi, b.hi_open, true),
                     corner_mul(a.hi, a.hi_open, b.lo, b.lo_open, true),
                     corner_mul(a.hi, a.hi_open, b.hi, b.hi_open, true)};
  Corner lo = lows[0], hi = highs[0];
  for (int i = 1; i < 4; ++i) {
    if (lows[i].value < lo.value || (lows[i].value == lo.value && !lows[i].open)) lo = lows[i];
    if (highs[i].value > hi.value || (highs[i].value == hi.value && !highs[i].open)) hi = highs[i];
  }
  return {lo.value, hi.value, lo.open, hi.open};
}

Interval operator/(const Interval& a, const Interval& b) {
  // a divisor touching 0 only at an endpoint is nonzero wherever the
  // quotient is defined
  bool one_sided = b.is_nonneg() || b.is_nonpos();
  if (!one_sided || (b.lo == 0.0 && b.hi == 0.0)) return Interval::entire();
  return a * interval_pow(b, Rational(-1));
}

Interval interval_pow(const Interval& base, const Rational& c) {
  if (c.is_zero()) return Interval::point(1.0);
  if (c == Rational(1)) return base;
  double e = c.to_double();
  auto p = [&](double v) { return std::pow(v, e); };
  if (c.is_integer()) {
    auto ex = [&](double v) { return exact_integer_power(v, c); };
    bool even = c.is_even_integer();
    if (c.sign() > 0) {
      if (!even) return increasing(base, p, ex);
      if (base.is_nonneg()) return increasing(base, p, ex);
      if (base.is_nonpos()) return decreasing(base, p, ex);
      double m = std::max(p(base.lo), p(base.hi));
      bool mo = p(base.lo) >= p(base.hi) ? base.lo_open : base.hi_open;
      bool exact = ex(p(base.lo) >= p(base.hi) ? base.lo : base.hi);
      return {0.0, exact ? m : nudge(m, true), false, mo || !std::isfinite(m)};
    }
    // Negative integer power: undefined at 0.
    if (base.is_nonneg()) {
      Interval r = decreasing(base, p, ex);
      return {r.lo, r.hi, r.lo_open, r.hi_open || base.lo == 0.0};
    }
    if (base.is_nonpos()) {
      // approach 0 from below so odd powers give -inf rather than +inf
      Interval neg = base;
      if (neg.hi == 0.0) neg.hi = -0.0;
      Interval r = even ? increasing(neg, p, ex) : decreasing(neg, p, ex);
      if (even) return {r.lo, r.hi, r.lo_open, r.hi_open || base.hi == 0.0};
      return {r.lo, r.hi, r.lo_open || base.hi == 0.0, r.hi_open};
    }
    return even ? Interval::positive() : Interval::entire();
  }
  // Non-integer exponent: real power defined for base >= 0 only.
  auto clipped = clip(base, Interval::nonneg());
  if (!clipped) return Interval::entire();
  if (c.sign() > 0) return increasing(*clipped, p);
  Interval r = decreasing(*clipped, p);
  return {r.lo, r.hi, r.lo_open, r.hi_open || clipped->lo == 0.0};
}

Interval fn_domain(FnKind fn) {
  switch (fn) {
    case FnKind::Log:
      return Interval::positive();
    case FnKind::Sqrt:
      return Interval::nonneg();
    case FnKind::Arccos:
    case FnKind::Arcsin:
      return {-1.0, 1.0};
    default:
      return Interval::entire();
  }
}

Interval interval_fn(FnKind fn, const Interval& arg) {
  auto a = clip(arg, fn_domain(fn));
  if (!a) return Interval::entire();
  switch (fn) {
    case FnKind::Exp: {
      Interval r = increasing(*a, [](double v) { return std::exp(v); });
      if (r.lo <= 0.0) r = {0.0, r.hi, true, r.hi_open};
      return r;
    }
    case FnKind::Log:
      return increasing(*a, [](double v) { return v <= 0.0 ? -kInf : std::log(v); });
    case FnKind::Sqrt:
      return increasing(*a, [](double v) { return std::sqrt(v); });
    case FnKind::Sinh:
      return increasing(*a, [](double v) { return std::sinh(v); });
    case FnKind::Tanh: {
      Interval r = increasing(*a, [](double v) { return std::tanh(v); });
      return r.intersect({-1.0, 1.0, true, true});
    }
    case FnKind::Arctan: {
      double h = std::numbers::pi / 2;
      Interval r = increasing(*a, [](double v) { return std::atan(v); });
      return r.intersect({-up(h), up(h)});
    }
    case FnKind::Arcsin:
      return increasing(*a, [](double v) { return std::asin(v); });
    case FnKind::Arccos:
      return decreasing(*a, [](double v) { return std::acos(v); });
    case FnKind::Cosh: {
      auto c = [](double v) { return std::cosh(v); };
      if (a->is_nonneg()) return increasing(*a, c);
      if (a->is_nonpos()) return decreasing(*a, c);
      double m = std::max(c(a->lo), c(a->hi));
      return {1.0, nudge(m, true), false, !std::isfinite(m)};
    }
    case FnKind::Sin:
    case FnKind::Cos:
      return {-1.0, 1.0};
    case FnKind::Tan:
      return Interval::entire();
    case FnKind::Abs: {
      if (a->is_nonneg()) return *a;
      if (a->is_nonpos()) return -*a;
      double m = std::max(-a->lo, a->hi);
      return {0.0, m, false, !std::isfinite(m)};
    }
    case FnKind::Sign: {
      if (a->is_positive()) return Interval::point(1.0);
      if (a->is_negative()) return Interval::point(-1.0);
      if (a->is_nonneg()) return {0.0, 1.0};
      if (a->is_nonpos()) return {-1.0, 0.0};
      return {-1.0, 1.0};
    }
  }
  return Interval::entire();
}

Interval interval_sum(const Interval& e) {
  if (e.lo == 0.0 && e.hi == 0.0) return Interval::point(0.0);
  if (e.is_nonneg()) return {e.lo, kInf, e.lo_open, true};
  if (e.is_nonpos()) return {-kInf, e.hi, true, e.hi_open};
  return Interval::entire();
}

}  // namespace convexcert
