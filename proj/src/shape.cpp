#include "convexcert/shape.hpp"

#include <sstream>

namespace convexcert {

std::string Shape::str() const {
  switch (rank) {
    case Rank::Scalar: return "scalar";
    case Rank::Vector: return "vector(" + rows + ")";
    case Rank::Matrix: return "matrix(" + rows + "*" + cols + ")";
  }
  return "?";
}

void SymbolTable::declare(const std::string& name, Shape shape, SymbolRole role) {
  table_[name] = {std::move(shape), role};
}

void SymbolTable::set_variable(const std::string& name) {
  auto it = table_.find(name);
  if (it == table_.end()) throw UnknownSymbol(name);
  if (it->second.shape.is_matrix())
    throw ShapeError("optimization variable '" + name + "' must be scalar or vector, got " + it->second.shape.str());
  if (!variable_.empty()) table_[variable_].role = SymbolRole::Parameter;
  it->second.role = SymbolRole::Variable;
  variable_ = name;
}

const SymbolInfo& SymbolTable::at(const std::string& name) const {
  auto it = table_.find(name);
  if (it == table_.end()) throw UnknownSymbol(name);
  return it->second;
}

SymbolTable SymbolTable::from_dims(const std::string& dims) {
  SymbolTable t;
  std::stringstream ss(dims);
  std::string item;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos) throw ShapeError("malformed dimension declaration '" + item + "'");
    std::string name = trim(item.substr(0, colon));
    std::string spec = trim(item.substr(colon + 1));
    auto star = spec.find('*');
    if (name.empty() || spec.empty()) throw ShapeError("malformed dimension declaration '" + item + "'");
    if (star == std::string::npos) {
      t.declare(name, Shape::vector(spec));
    } else {
      std::string r = trim(spec.substr(0, star)), c = trim(spec.substr(star + 1));
      if (r.empty() || c.empty()) throw ShapeError("malformed dimension declaration '" + item + "'");
      t.declare(name, Shape::matrix(r, c));
    }
  }
  return t;
}

}  // namespace convexcert
