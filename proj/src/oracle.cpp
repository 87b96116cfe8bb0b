#include "convexcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace convexcert {

int Binding::dim(const std::string& name) const {
  if (!name.empty() && std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::stoi(name);
  auto it = dims.find(name);
  if (it == dims.end()) throw EvalError("no concrete size for dimension '" + name + "'");
  return it->second;
}

namespace {

int rows_of(const Shape& s, const Binding& b) { return s.is_scalar() ? 1 : b.dim(s.rows); }
int cols_of(const Shape& s, const Binding& b) { return s.is_matrix() ? b.dim(s.cols) : 1; }

bool is_scalar(const Value& v) { return v.rows() == 1 && v.cols() == 1; }

// Elementwise binary op with scalar broadcast on either side.
template <class F>
Value broadcast(const Value& a, const Value& b, F f) {
  if (is_scalar(a) && !is_scalar(b)) return b.unaryExpr([&](double y) { return f(a(0, 0), y); });
  if (is_scalar(b) && !is_scalar(a)) return a.unaryExpr([&](double x) { return f(x, b(0, 0)); });
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw EvalError("elementwise size mismatch");
  return a.binaryExpr(b, f);
}

double checked_pow(double x, double e, std::optional<Rational> exact) {
  if (exact && exact->is_integer()) {
    if (x == 0.0 && exact->sign() < 0) throw EvalError("division by zero in power");
    return std::pow(x, static_cast<double>(exact->num()));
  }
  if (x < 0.0) throw EvalError("negative base with non-integer exponent");
  if (x == 0.0 && e < 0.0) throw EvalError("division by zero in power");
  return std::pow(x, e);
}

double apply_fn(FnKind f, double x) {
  switch (f) {
    case FnKind::Exp: return std::exp(x);
    case FnKind::Log:
      if (x <= 0.0) throw EvalError("log of a nonpositive number");
      return std::log(x);
    case FnKind::Sqrt:
      if (x < 0.0) throw EvalError("sqrt of a negative number");
      return std::sqrt(x);
    case FnKind::Sin: return std::sin(x);
    case FnKind::Cos: return std::cos(x);
    case FnKind::Tan: return std::tan(x);
    case FnKind::Sinh: return std::sinh(x);
    case FnKind::Cosh: return std::cosh(x);
    case FnKind::Tanh: return std::tanh(x);
    case FnKind::Arccos:
      if (std::abs(x) > 1.0) throw EvalError("arccos outside [-1, 1]");
      return std::acos(x);
    case FnKind::Arcsin:
      if (std::abs(x) > 1.0) throw EvalError("arcsin outside [-1, 1]");
      return std::asin(x);
    case FnKind::Arctan: return std::atan(x);
    case FnKind::Abs: return std::abs(x);
    case FnKind::Sign: return static_cast<double>((x > 0) - (x < 0));
  }
  return 0.0;
}

class Evaluator {
 public:
  Evaluator(const Dag& d, const Binding& b) : d_(d), b_(b) {}

  const Value& eval(NodeId id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    Value v = compute(id);
    if (!v.allFinite()) throw EvalError("non-finite value");
    return memo_.emplace(id, std::move(v)).first->second;
  }

 private:
  Value compute(NodeId id) {
    const Node& n = d_[id];
    std::vector<Value> k;
    for (NodeId c : n.kids) k.push_back(eval(c));
    auto exponent_of = [&](std::size_t i) -> std::optional<Rational> {
      const Node& e = d_[n.kids[i]];
      if (e.op == Op::Const) return e.value;
      return std::nullopt;
    };
    switch (n.op) {
      case Op::Const: return Value::Constant(1, 1, n.value.to_double());
      case Op::Ones: return Value::Ones(rows_of(n.shape, b_), 1);
      case Op::Zero: return Value::Zero(rows_of(n.shape, b_), cols_of(n.shape, b_));
      case Op::Symbol: {
        auto it = b_.values.find(n.name);
        if (it == b_.values.end()) throw EvalError("no value bound for '" + n.name + "'");
        const Value& v = it->second;
        if (v.rows() != rows_of(n.shape, b_) || v.cols() != cols_of(n.shape, b_))
          throw EvalError("value for '" + n.name + "' has the wrong size");
        return v;
      }
      case Op::Neg: return -k[0];
      case Op::Sub: return k[0] - k[1];
      case Op::Add: {
        Value s = k[0];
        for (std::size_t i = 1; i < k.size(); ++i) s += k[i];
        return s;
      }
      case Op::RawMul:
        if (is_scalar(k[0]) && n.shape.rank != Rank::Scalar) return k[0](0, 0) * k[1];
        if (is_scalar(k[1]) && n.shape.rank != Rank::Scalar) return k[0] * k[1](0, 0);
        if (is_scalar(k[0]) && is_scalar(k[1])) return k[0] * k[1](0, 0);
        return k[0] * k[1];
      case Op::EMul:
      case Op::Mul: {
        Value p = k[0];
        for (std::size_t i = 1; i < k.size(); ++i) p = broadcast(p, k[i], [](double x, double y) { return x * y; });
        return p;
      }
      case Op::Div:
      case Op::EDiv:
        return broadcast(k[0], k[1], [](double x, double y) {
          if (y == 0.0) throw EvalError("division by zero");
          return x / y;
        });
      case Op::RawPow:
      case Op::EPow:
      case Op::Pow: {
        auto exact = exponent_of(1);
        return broadcast(k[0], k[1], [&](double x, double e) { return checked_pow(x, e, exact); });
      }
      case Op::VectorOf: return Value::Constant(rows_of(n.shape, b_), 1, k[0](0, 0));
      case Op::Transpose: return k[0].transpose();
      case Op::Fn: return k[0].unaryExpr([&](double x) { return apply_fn(n.fn, x); });
      case Op::Sum: return Value::Constant(1, 1, k[0].sum());
      case Op::Diag: return Value(k[0].col(0).asDiagonal());
      case Op::Norm2: return Value::Constant(1, 1, k[0].norm());
      case Op::MatMul: {
        Value p = k[0];
        for (std::size_t i = 1; i < k.size(); ++i) p = p * k[i];
        return p;
      }
      case Op::Dot: return Value::Constant(1, 1, k[0].col(0).dot(k[1].col(0)));
      case Op::Outer: return k[0] * k[1].transpose();
    }
    throw EvalError("unknown operator");
  }

  const Dag& d_;
  const Binding& b_;
  std::unordered_map<NodeId, Value> memo_;
};

}  // namespace

Value evaluate(const Dag& dag, NodeId root, const Binding& binding) {
  Evaluator e(dag, binding);
  return e.eval(root);
}

double evaluate_scalar(const Dag& dag, NodeId root, const Binding& binding) {
  Value v = evaluate(dag, root, binding);
  if (!is_scalar(v)) throw EvalError("expected a scalar value");
  return v(0, 0);
}

namespace {

struct CompiledAssumption {
  const lang::Assumption* a;
  NormalizedDag subject;
};

std::vector<CompiledAssumption> compile(const SymbolTable& symbols, const std::vector<lang::Assumption>& as) {
  std::vector<CompiledAssumption> out;
  for (const auto& a : as) out.push_back({&a, normalize(infer_shapes(a.subject, symbols))});
  return out;
}

bool holds(const Interval& iv, const Value& v, bool psd_sense) {
  if (psd_sense) {
    Eigen::MatrixXd sym = (v + v.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    double tol = 1e-9 * (1.0 + v.cwiseAbs().maxCoeff());
    if (iv.lo == 0.0 && lo < -tol) return false;
    if (iv.hi == 0.0 && hi > tol) return false;
    return true;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!iv.contains(v.data()[i])) return false;
  return true;
}

bool check_one(const CompiledAssumption& c, const Binding& b) {
  const Shape& s = c.subject.root_node().shape;
  try {
    Value v = evaluate(*c.subject.dag, c.subject.root, b);
    return holds(c.a->interval(), v, s.is_matrix() && !s.is_row());
  } catch (const EvalError&) {
    return false;
  }
}

// Sampling box for a scalar entry given the interval.
std::pair<double, double> box_for(const Interval& iv, const SampleConfig& cfg) {
  double lo = -cfg.box, hi = cfg.box;
  if (iv.lo > -Interval::kInf) lo = iv.lo + (iv.lo_open ? cfg.margin : 0.0);
  if (iv.hi < Interval::kInf) hi = iv.hi - (iv.hi_open ? cfg.margin : 0.0);
  if (iv.lo > -Interval::kInf && iv.hi == Interval::kInf) hi = std::max(lo + cfg.box, cfg.box);
  if (iv.hi < Interval::kInf && iv.lo == -Interval::kInf) lo = std::min(hi - cfg.box, -cfg.box);
  if (lo > hi) throw EmptyDomain("no room to sample inside " + iv.str());
  return {lo, hi};
}

}  // namespace

bool satisfies(const SymbolTable& symbols, const std::vector<lang::Assumption>& assumptions, const Binding& b) {
  for (const auto& c : compile(symbols, assumptions))
    if (!check_one(c, b)) return false;
  return true;
}

Binding sample_feasible(const SymbolTable& symbols, const std::vector<lang::Assumption>& assumptions,
                        const SampleConfig& config, std::mt19937_64& rng) {
  Binding b;
  auto concrete = [&](const std::string& d) {
    if (d.empty() || b.dims.count(d)) return;
    if (std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; })) return;
    auto it = config.dims.find(d);
    b.dims[d] = it != config.dims.end() ? it->second : config.default_dim;
  };
  for (const auto& [name, info] : symbols.entries()) {
    concrete(info.shape.rows);
    concrete(info.shape.cols);
  }

  // per-symbol intervals from direct assumptions
  std::map<std::string, Interval> direct;
  std::vector<lang::Assumption> compound;
  for (const auto& a : assumptions) {
    if (a.on_variable() && symbols.contains(a.subject.name)) {
      auto [it, fresh] = direct.emplace(a.subject.name, a.interval());
      if (!fresh) it->second = it->second.intersect(a.interval());
    } else {
      compound.push_back(a);
    }
  }
  auto compiled = compile(symbols, compound);

  for (int attempt = 0; attempt < 2000; ++attempt) {
    for (const auto& [name, info] : symbols.entries()) {
      Interval iv = direct.count(name) ? direct.at(name) : Interval::entire();
      int r = info.shape.is_scalar() ? 1 : b.dim(info.shape.rows);
      int c = info.shape.is_matrix() ? b.dim(info.shape.cols) : 1;
      Value v(r, c);
      if (info.shape.is_matrix() && !info.shape.is_row() && (iv.lo == 0.0 || iv.hi == 0.0)) {
        // semidefinite matrix symbol
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Eigen::MatrixXd f(r, r);
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
        v = f * f.transpose();
        if (iv.lo_open || iv.hi_open) v += config.margin * Eigen::MatrixXd::Identity(r, r);
        if (iv.hi == 0.0 && iv.lo != 0.0) v = -v;
      } else {
        auto [lo, hi] = box_for(iv, config);
        std::uniform_real_distribution<double> u(lo, hi);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = lo == hi ? lo : u(rng);
      }
      b.values[name] = v;
    }
    bool ok = true;
    for (const auto& c : compiled) ok = ok && check_one(c, b);
    if (ok) return b;
  }
  throw EmptyDomain("could not sample a point satisfying the assumptions");
}

namespace {

Eigen::VectorXd flat(const Value& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

Binding shifted(const Binding& b, const std::string& wrt, Eigen::Index i, double delta) {
  Binding s = b;
  s.values[wrt].data()[i] += delta;
  return s;
}

}  // namespace

Eigen::VectorXd finite_diff_gradient(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                     double h) {
  Eigen::MatrixXd J = finite_diff_jacobian(dag, root, wrt, b, h);
  return J.row(0).transpose();
}

Eigen::MatrixXd finite_diff_jacobian(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                     double h) {
  const Value& x = b.values.at(wrt);
  Eigen::Index n = x.size();
  Eigen::Index k = evaluate(dag, root, b).size();
  Eigen::MatrixXd J(k, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double step = h * (1.0 + std::abs(x.data()[j]));
    Eigen::VectorXd plus = flat(evaluate(dag, root, shifted(b, wrt, j, step)));
    Eigen::VectorXd minus = flat(evaluate(dag, root, shifted(b, wrt, j, -step)));
    J.col(j) = (plus - minus) / (2.0 * step);
  }
  return J;
}

Eigen::MatrixXd finite_diff_hessian(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                    double h) {
  const Value& x = b.values.at(wrt);
  Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  auto f = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
    Binding s = b;
    s.values[wrt].data()[i] += di;
    s.values[wrt].data()[j] += dj;
    return evaluate_scalar(dag, root, s);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    double hi = h * (1.0 + std::abs(x.data()[i]));
    for (Eigen::Index j = i; j < n; ++j) {
      double hj = h * (1.0 + std::abs(x.data()[j]));
      double v = (f(i, hi, j, hj) - f(i, hi, j, -hj) - f(i, -hi, j, hj) + f(i, -hi, j, -hj)) / (4.0 * hi * hj);
      H(i, j) = H(j, i) = v;
    }
  }
  return H;
}

double min_quadratic_form(const Dag& dag, NodeId hessian, const Binding& b) {
  Value H = evaluate(dag, hessian, b);
  if (H.rows() != H.cols()) throw EvalError("Hessian value is not square");
  if (H.size() == 1) return H(0, 0);
  Eigen::MatrixXd sym = (H + H.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace convexcert
