// Sign proofs for sums that plain interval arithmetic cannot sign, such as
// exp(x)*(log(x) + 2/x - 1/x^2) on x >= 1 or exp(x) - exp(2*x) on x <= 0.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "convexcert/positivity.hpp"

namespace convexcert {
namespace {

using Poly = std::vector<Rational>;  // coefficients by ascending degree

void trim(Poly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

Rational eval(const Poly& p, const Rational& x) {
  Rational r(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * x + *it;
  return r;
}

Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * Rational(static_cast<std::int64_t>(i)));
  trim(d);
  return d;
}

Poly remainder(Poly a, const Poly& b) {
  trim(a);
  while (a.size() >= b.size() && !a.empty()) {
    Rational q = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[i + shift] -= q * b[i];
    a.pop_back();
    trim(a);
  }
  return a;
}

// p / (x - r) for a root r.
Poly deflate(const Poly& p, const Rational& r) {
  Poly q(p.size() - 1);
  Rational carry(0);
  for (std::size_t i = p.size() - 1; i >= 1; --i) {
    carry = p[i] + carry * r;
    q[i - 1] = carry;
  }
  return q;
}

Poly quotient(Poly a, const Poly& b) {
  trim(a);
  if (a.size() < b.size()) return {};
  Poly q(a.size() - b.size() + 1, Rational(0));
  while (a.size() >= b.size() && !a.empty()) {
    Rational c = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    q[shift] = c;
    for (std::size_t i = 0; i < b.size(); ++i) a[i + shift] -= c * b[i];
    a.pop_back();
    trim(a);
  }
  return q;
}

Poly monic(Poly p) {
  trim(p);
  if (p.empty()) return p;
  Rational lead = p.back();
  for (Rational& c : p) c = c / lead;
  return p;
}

Poly gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = remainder(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return monic(a);
}

Poly product(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// Product of the factors of odd multiplicity, with p's leading sign. It has
// the same sign as p wherever p is nonzero (Yun's squarefree factorization).
Poly odd_part(const Poly& p) {
  Poly dp = derivative(p);
  if (dp.empty()) return p;
  Poly a = gcd(p, dp);
  Poly b = quotient(p, a), c = quotient(dp, a);
  Poly odd{p.back().sign() > 0 ? Rational(1) : Rational(-1)};
  for (int i = 1; b.size() > 1; ++i) {
    Poly d = c;
    Poly db = derivative(b);
    d.resize(std::max(d.size(), db.size()), Rational(0));
    for (std::size_t k = 0; k < db.size(); ++k) d[k] -= db[k];
    trim(d);
    Poly f = gcd(b, d);
    if (i % 2 == 1) odd = product(odd, f);
    b = quotient(b, f);
    c = quotient(d, f);
  }
  return odd;
}

std::vector<Poly> sturm_chain(const Poly& p) {
  std::vector<Poly> chain{p, derivative(p)};
  while (!chain.back().empty()) {
    Poly r = remainder(chain[chain.size() - 2], chain.back());
    for (Rational& c : r) c = -c;
    if (r.empty()) break;
    chain.push_back(std::move(r));
  }
  if (chain.back().empty()) chain.pop_back();
  return chain;
}

int sign_at(const Poly& p, std::optional<Rational> x, bool minus_inf) {
  if (p.empty()) return 0;
  if (x) return eval(p, *x).sign();
  int lead = p.back().sign();
  bool odd = (p.size() - 1) % 2 == 1;
  return minus_inf && odd ? -lead : lead;
}

int variations(const std::vector<Poly>& chain, std::optional<Rational> x, bool minus_inf) {
  int count = 0, last = 0;
  for (const Poly& p : chain) {
    int s = sign_at(p, x, minus_inf);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

// Rational at most `d` below (down) or above x on a 2^-16 grid; nullopt for
// infinite or huge endpoints.
std::optional<Rational> grid(double x, bool down) {
  if (!std::isfinite(x) || std::fabs(x) > 1e12) return std::nullopt;
  double scaled = x * 65536.0;
  double g = down ? std::floor(scaled) : std::ceil(scaled);
  return Rational(static_cast<std::int64_t>(g), 65536);
}

bool poly_nonneg(Poly p, const Interval& dom) {
  trim(p);
  if (p.empty()) return true;
  std::optional<Rational> lo = grid(dom.lo, true), hi = grid(dom.hi, false);
  if ((dom.lo > -Interval::kInf && !lo) || (dom.hi < Interval::kInf && !hi)) return false;
  int sign = 1;
  // factor out roots sitting on the endpoints: (x - lo)^k >= 0 on the
  // domain, (x - hi)^k alternates
  while (lo && p.size() > 1 && eval(p, *lo).is_zero()) p = deflate(p, *lo);
  while (hi && p.size() > 1 && eval(p, *hi).is_zero()) {
    p = deflate(p, *hi);
    sign = -sign;
  }
  if (p.size() == 1) return (p[0].sign() * sign) >= 0;
  // roots of even multiplicity, like the one in (x - 1)^2, do not change sign
  p = odd_part(p);
  if (p.size() == 1) return (p[0].sign() * sign) >= 0;
  std::vector<Poly> chain = sturm_chain(p);
  int roots = variations(chain, lo, true) - variations(chain, hi, false);
  if (roots != 0) return false;
  Rational probe = lo && hi ? (*lo + *hi) / Rational(2) : lo ? *lo + Rational(1) : hi ? *hi - Rational(1) : Rational(0);
  return eval(p, probe).sign() * sign >= 0;
}

struct Term {
  Rational coef;
  std::map<NodeId, Rational> f;
};

Interval term_interval(const Term& t, const IntervalFn& iv) {
  Interval r = Interval::point(t.coef);
  for (const auto& [base, e] : t.f) r = r * interval_pow(iv(base), e);
  return r;
}

bool nonneg(Builder& b, std::vector<Term> terms, const IntervalFn& iv, int depth);

// Groups of terms c_k * K * X^e_k that share everything but the power of X.
bool strip_laurent_groups(std::vector<Term>& terms, const IntervalFn& iv) {
  std::map<NodeId, int> seen;
  for (const Term& t : terms)
    for (const auto& [base, e] : t.f) ++seen[base];
  for (const auto& [x, count] : seen) {
    if (count < 2) continue;
    std::map<std::map<NodeId, Rational>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      auto key = terms[i].f;
      key.erase(x);
      groups[key].push_back(i);
    }
    std::vector<std::size_t> drop;
    for (const auto& [key, idx] : groups) {
      if (idx.size() < 2) continue;
      Interval k = Interval::point(1.0);
      for (const auto& [base, e] : key) k = k * interval_pow(iv(base), e);
      if (!k.is_nonneg() && !k.is_nonpos()) continue;
      std::vector<std::pair<Rational, Rational>> poly;
      for (std::size_t i : idx) {
        auto it = terms[i].f.find(x);
        Rational c = k.is_nonneg() ? terms[i].coef : -terms[i].coef;
        poly.emplace_back(c, it == terms[i].f.end() ? Rational(0) : it->second);
      }
      if (laurent_nonneg(poly, iv(x))) drop.insert(drop.end(), idx.begin(), idx.end());
    }
    if (!drop.empty()) {
      std::sort(drop.begin(), drop.end());
      for (auto it = drop.rbegin(); it != drop.rend(); ++it) terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(*it));
      return true;
    }
  }
  return false;
}

bool nonneg(Builder& b, std::vector<Term> terms, const IntervalFn& iv, int depth) {
  if (depth > 8) return false;
  bool all = std::all_of(terms.begin(), terms.end(), [&](const Term& t) { return term_interval(t, iv).is_nonneg(); });
  if (all) return true;
  // common factor with positive range
  std::map<NodeId, Rational> common;
  bool first = true;
  for (const Term& t : terms) {
    if (first) {
      for (const auto& [base, e] : t.f)
        if (iv(base).is_positive()) common[base] = e;
      first = false;
      continue;
    }
    for (auto it = common.begin(); it != common.end();) {
      auto f = t.f.find(it->first);
      if (f == t.f.end()) {
        it = common.erase(it);
      } else {
        it->second = std::min(it->second, f->second);
        ++it;
      }
    }
  }
  if (!common.empty()) {
    for (Term& t : terms)
      for (const auto& [base, e] : common) {
        t.f[base] -= e;
        if (t.f[base].is_zero()) t.f.erase(base);
      }
    if (nonneg(b, terms, iv, depth + 1)) return true;
  }
  std::vector<Term> rest = terms;
  if (strip_laurent_groups(rest, iv)) {
    if (rest.empty()) return true;
    return nonneg(b, rest, iv, depth + 1);
  }
  Interval sum = Interval::point(0.0);
  for (const Term& t : terms) sum = sum + term_interval(t, iv);
  return sum.is_nonneg();
}

std::vector<Term> terms_of(Builder& b, NodeId sum) {
  std::vector<Term> out;
  for (NodeId k : std::vector<NodeId>(b.dag()[sum].kids)) {
    auto [c, r] = b.split_coefficient(k);
    Term t{c, {}};
    for (auto& [base, e] : b.factors(r)) {
      const Node n = b.dag()[base];
      if (n.op == Op::Ones) continue;
      NodeId key = base;
      Rational ex = e;
      if (n.op == Op::Fn && n.fn == FnKind::Exp) {
        // exp(k*a) = exp(a)^k
        auto [kc, inner] = b.split_coefficient(n.kids[0]);
        if (!b.is_const(n.kids[0]) && kc != Rational(1)) {
          key = b.fn(FnKind::Exp, inner);
          ex = e * kc;
        }
      }
      t.f[key] += ex;
      if (t.f[key].is_zero()) t.f.erase(key);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

bool laurent_nonneg(const std::vector<std::pair<Rational, Rational>>& terms, const Interval& domain) {
  try {
    std::int64_t q = 1;
    for (const auto& [c, e] : terms) q = std::lcm(q, e.den());
    Interval t = domain;
    if (q > 1) {
      if (!domain.is_nonneg()) return false;
      t = interval_pow(domain, Rational(1, q));
    }
    std::int64_t lo = 0;
    bool first = true;
    for (const auto& [c, e] : terms) {
      std::int64_t n = (e * Rational(q)).num();
      lo = first ? n : std::min(lo, n);
      first = false;
    }
    if (lo < 0 && !t.is_nonneg()) return false;
    if (lo > 0) lo = 0;
    Poly p;
    for (const auto& [c, e] : terms) {
      std::int64_t n = (e * Rational(q)).num() - lo;
      if (n > 64) return false;
      if (p.size() <= static_cast<std::size_t>(n)) p.resize(static_cast<std::size_t>(n) + 1, Rational(0));
      p[static_cast<std::size_t>(n)] += c;
    }
    return poly_nonneg(p, t);
  } catch (const RationalOverflow&) {
    return false;
  }
}

std::optional<Interval> decide_sign(Builder& b, NodeId sum, const IntervalFn& iv) {
  if (b.dag()[sum].op != Op::Add || b.dag()[sum].shape.is_matrix()) return std::nullopt;
  std::vector<Term> terms = terms_of(b, sum);
  if (nonneg(b, terms, iv, 0)) return Interval::nonneg();
  for (Term& t : terms) t.coef = -t.coef;
  if (nonneg(b, terms, iv, 0)) return Interval::nonpos();
  return std::nullopt;
}

}  // namespace convexcert
