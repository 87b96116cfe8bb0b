#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace convexcert {

enum class Rank { Scalar, Vector, Matrix };

/// Symbolic dimensions are opaque names compared by equality. "1" is the unit
/// dimension used for row vectors (matrix 1 x k); "?" is an unresolved
/// dimension produced by vector(c) before shape inference pins it down.
struct Shape {
  Rank rank = Rank::Scalar;
  std::string rows;
  std::string cols;

  static Shape scalar() { return {}; }
  static Shape vector(std::string n) { return {Rank::Vector, std::move(n), ""}; }
  static Shape matrix(std::string r, std::string c) { return {Rank::Matrix, std::move(r), std::move(c)}; }

  bool is_scalar() const { return rank == Rank::Scalar; }
  bool is_vector() const { return rank == Rank::Vector; }
  bool is_matrix() const { return rank == Rank::Matrix; }
  bool is_row() const { return rank == Rank::Matrix && rows == "1"; }
  bool is_square() const { return rank == Rank::Matrix && rows == cols; }
  bool has_wildcard() const { return rows == "?" || cols == "?"; }

  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
  friend auto operator<=>(const Shape&, const Shape&) = default;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownSymbol : std::runtime_error {
  explicit UnknownSymbol(const std::string& name) : std::runtime_error("unknown symbol '" + name + "'"), symbol(name) {}
  std::string symbol;
};

enum class SymbolRole { Variable, Parameter, Constant };

struct SymbolInfo {
  Shape shape;
  SymbolRole role = SymbolRole::Parameter;
};

/// Per-name shape and role. Exactly one name is the optimization variable of
/// a certification run.
class SymbolTable {
 public:
  void declare(const std::string& name, Shape shape, SymbolRole role = SymbolRole::Parameter);
  void set_variable(const std::string& name);
  bool contains(const std::string& name) const { return table_.count(name) != 0; }
  const SymbolInfo& at(const std::string& name) const;
  const std::map<std::string, SymbolInfo>& entries() const { return table_; }
  /// Name of the designated optimization variable, empty if none.
  const std::string& variable() const { return variable_; }

  /// Parses "X:m*n,w:n,y:m" into shape declarations (all parameters).
  static SymbolTable from_dims(const std::string& dims);

 private:
  std::map<std::string, SymbolInfo> table_;
  std::string variable_;
};

}  // namespace convexcert
