// Shape inference from the AST into a shaped tree.

#include <functional>

#include "convexcert/dag.hpp"

namespace convexcert {
namespace {

using lang::Ast;
using lang::AstKind;

[[noreturn]] void shape_fail(const Ast& at, const std::string& what) {
  throw ShapeError("at offset " + std::to_string(at.position) + ": " + what);
}

void pin(ShapedExpr& e, const std::string& dim) {
  if (!e.shape.has_wildcard()) return;
  if (e.shape.rows == "?") e.shape.rows = dim;
  if (e.shape.cols == "?") e.shape.cols = dim;
  for (auto& k : e.kids) pin(k, dim);
}

bool unify_dim(ShapedExpr& a, std::string& da, ShapedExpr& b, std::string& db) {
  if (da == db) return true;
  if (da == "?") { pin(a, db); return true; }
  if (db == "?") { pin(b, da); return true; }
  return false;
}

// Identical shapes, pinning wildcard dims on either side.
bool unify(ShapedExpr& a, ShapedExpr& b) {
  if (a.shape.rank != b.shape.rank) return false;
  if (a.shape.is_scalar()) return true;
  std::string ar = a.shape.rows, br = b.shape.rows;
  if (!unify_dim(a, ar, b, br)) return false;
  if (a.shape.is_matrix()) {
    std::string ac = a.shape.cols, bc = b.shape.cols;
    if (!unify_dim(a, ac, b, bc)) return false;
  }
  return true;
}

Op binary_op(AstKind k) {
  switch (k) {
    case AstKind::Add: return Op::Add;
    case AstKind::Sub: return Op::Sub;
    case AstKind::Mul: return Op::RawMul;
    case AstKind::Div: return Op::Div;
    case AstKind::Pow: return Op::RawPow;
    case AstKind::EMul: return Op::EMul;
    case AstKind::EDiv: return Op::EDiv;
    case AstKind::EPow: return Op::EPow;
    default: break;
  }
  throw std::logic_error("not a binary operator");
}

std::string symbol_of(AstKind k) {
  switch (k) {
    case AstKind::Add: return "+";
    case AstKind::Sub: return "-";
    case AstKind::Mul: return "*";
    case AstKind::Div: return "/";
    case AstKind::Pow: return "^";
    case AstKind::EMul: return ".*";
    case AstKind::EDiv: return "./";
    case AstKind::EPow: return ".^";
    default: return "?";
  }
}

ShapedExpr infer(const Ast& ast, const SymbolTable& symbols) {
  ShapedExpr e;
  e.position = ast.position;
  switch (ast.kind) {
    case AstKind::Number:
      e.op = Op::Const;
      e.value = ast.value;
      return e;
    case AstKind::Variable:
      e.op = Op::Symbol;
      e.name = ast.name;
      e.shape = symbols.at(ast.name).shape;
      return e;
    case AstKind::Neg:
    case AstKind::Transpose: {
      e.kids.push_back(infer(ast.children[0], symbols));
      const Shape& s = e.kids[0].shape;
      if (ast.kind == AstKind::Neg) {
        e.op = Op::Neg;
        e.shape = s;
      } else {
        e.op = Op::Transpose;
        if (s.is_scalar()) e.shape = s;
        else if (s.is_vector()) e.shape = Shape::matrix("1", s.rows);
        else if (s.is_row()) e.shape = Shape::vector(s.cols);
        else e.shape = Shape::matrix(s.cols, s.rows);
      }
      return e;
    }
    case AstKind::Call: {
      e.kids.push_back(infer(ast.children[0], symbols));
      const Shape& s = e.kids[0].shape;
      std::string name(call_name(ast.call));
      if (auto f = as_fn(ast.call)) {
        e.op = Op::Fn;
        e.fn = *f;
        e.shape = s;
        return e;
      }
      switch (ast.call) {
        case CallKind::Sum:
        case CallKind::Norm2:
          if (!s.is_vector()) shape_fail(ast, name + " needs a vector argument, got " + s.str());
          e.op = ast.call == CallKind::Sum ? Op::Sum : Op::Norm2;
          e.shape = Shape::scalar();
          return e;
        case CallKind::Diag:
          if (!s.is_vector()) shape_fail(ast, "diag needs a vector argument, got " + s.str());
          e.op = Op::Diag;
          e.shape = Shape::matrix(s.rows, s.rows);
          return e;
        case CallKind::Vector:
          if (!s.is_scalar()) shape_fail(ast, "vector needs a scalar argument, got " + s.str());
          e.op = Op::VectorOf;
          e.shape = Shape::vector("?");
          return e;
        default:
          break;
      }
      throw std::logic_error("unhandled call");
    }
    default:
      break;
  }

  // binary operators
  e.op = binary_op(ast.kind);
  e.kids.push_back(infer(ast.children[0], symbols));
  e.kids.push_back(infer(ast.children[1], symbols));
  ShapedExpr& a = e.kids[0];
  ShapedExpr& b = e.kids[1];
  const std::string sym = symbol_of(ast.kind);
  auto mismatch = [&]() {
    shape_fail(ast, "operator '" + sym + "' got mismatched shapes " + a.shape.str() + " and " + b.shape.str());
  };

  switch (ast.kind) {
    case AstKind::Add:
    case AstKind::Sub:
      if (!unify(a, b)) mismatch();
      e.shape = a.shape;
      break;
    case AstKind::EMul:
    case AstKind::EDiv:
    case AstKind::EPow:
      if (a.shape.is_scalar()) e.shape = b.shape;
      else if (b.shape.is_scalar()) e.shape = a.shape;
      else if (unify(a, b)) e.shape = a.shape;
      else mismatch();
      break;
    case AstKind::Div:
      if (!b.shape.is_scalar()) mismatch();
      e.shape = a.shape;
      break;
    case AstKind::Pow:
      if (!a.shape.is_scalar() || !b.shape.is_scalar())
        shape_fail(ast, "'^' needs scalar operands, got " + a.shape.str() + " and " + b.shape.str() +
                            " (use .^ for elementwise powers)");
      break;
    case AstKind::Mul: {
      if (a.shape.is_scalar()) { e.shape = b.shape; break; }
      if (b.shape.is_scalar()) { e.shape = a.shape; break; }
      // matrix product; a vector acts as an n x 1 column
      std::string ar = a.shape.rows, ac = a.shape.is_vector() ? "1" : a.shape.cols;
      std::string br = b.shape.rows, bc = b.shape.is_vector() ? "1" : b.shape.cols;
      if (b.shape.is_vector()) {
        if (!unify_dim(a, ac, b, br)) mismatch();
        if (a.shape.is_vector()) mismatch();
      } else if (a.shape.is_vector()) {
        if (br != "1") mismatch();
      } else if (!unify_dim(a, ac, b, br)) {
        mismatch();
      }
      ar = a.shape.rows;
      bc = b.shape.is_vector() ? "1" : b.shape.cols;
      if (ar == "1" && bc == "1") e.shape = Shape::scalar();
      else if (bc == "1" && b.shape.is_vector()) e.shape = Shape::vector(ar);
      else e.shape = Shape::matrix(ar, bc);
      break;
    }
    default:
      break;
  }
  return e;
}

void check_resolved(const ShapedExpr& e) {
  if (e.shape.has_wildcard())
    throw ShapeError("at offset " + std::to_string(e.position) + ": cannot determine the dimension of vector(...)");
  for (const auto& k : e.kids) check_resolved(k);
}

}  // namespace

ShapedExpr infer_shapes(const lang::Ast& ast, const SymbolTable& symbols) {
  ShapedExpr e = infer(ast, symbols);
  check_resolved(e);
  return e;
}

}  // namespace convexcert
