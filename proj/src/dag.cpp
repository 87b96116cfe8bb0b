#include "convexcert/dag.hpp"

#include <algorithm>

#include "json.hpp"

namespace convexcert {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Ones: return "ones";
    case Op::Zero: return "zero";
    case Op::Symbol: return "symbol";
    case Op::Neg: return "neg";
    case Op::Sub: return "sub";
    case Op::Div: return "div";
    case Op::RawMul: return "mul*";
    case Op::RawPow: return "pow^";
    case Op::EMul: return "emul";
    case Op::EDiv: return "ediv";
    case Op::EPow: return "epow";
    case Op::VectorOf: return "vector";
    case Op::Add: return "add";
    case Op::Transpose: return "transpose";
    case Op::Fn: return "fn";
    case Op::Sum: return "sum";
    case Op::Diag: return "diag";
    case Op::Norm2: return "norm2";
    case Op::Mul: return "mul";
    case Op::Pow: return "pow";
    case Op::MatMul: return "matmul";
    case Op::Dot: return "dot";
    case Op::Outer: return "outer";
  }
  return "?";
}

std::size_t Dag::KeyHash::operator()(const Node& n) const {
  std::size_t h = static_cast<std::size_t>(n.op) * 0x9e3779b97f4a7c15ull;
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
  for (NodeId k : n.kids) mix(k);
  mix(n.value.hash());
  mix(std::hash<std::string>{}(n.name));
  mix(static_cast<std::size_t>(n.fn));
  mix(static_cast<std::size_t>(n.shape.rank));
  mix(std::hash<std::string>{}(n.shape.rows));
  mix(std::hash<std::string>{}(n.shape.cols));
  return h;
}

NodeId Dag::intern(Node n) {
  if (n.op != Op::Fn) n.fn = FnKind::Exp;
  auto it = index_.find(n);
  if (it != index_.end()) return it->second;
  for (NodeId k : n.kids)
    if (k >= nodes_.size()) throw std::logic_error("child id out of range");
  NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(n);
  index_.emplace(std::move(n), id);
  return id;
}

std::vector<NodeId> Dag::reachable(NodeId root) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{root}, out;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = 1;
    out.push_back(id);
    for (NodeId k : nodes_[id].kids) stack.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Dag::depends_on(NodeId id, const std::string& name) const {
  auto& memo = depends_memo_[name];
  if (memo.size() < nodes_.size()) {
    std::size_t start = memo.size();
    memo.resize(nodes_.size());
    // ids are topological, so one forward pass fills the new entries
    for (std::size_t i = start; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      bool dep = n.op == Op::Symbol && n.name == name;
      for (NodeId k : n.kids) dep = dep || memo[k];
      memo[i] = dep;
    }
  }
  return memo[id] != 0;
}

std::optional<NodeId> Dag::find_symbol(const std::string& name) const {
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].op == Op::Symbol && nodes_[i].name == name) return i;
  return std::nullopt;
}

std::string NormalizedDag::dump_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId id : dag->reachable(root)) {
    const Node& n = node(id);
    nlohmann::json j{{"id", id}, {"op", op_name(n.op)}, {"children", n.kids}, {"shape", n.shape.str()}};
    if (n.op == Op::Const) j["value"] = n.value.str();
    if (n.op == Op::Symbol) j["name"] = n.name;
    if (n.op == Op::Fn) j["fn"] = fn_name(n.fn);
    nodes.push_back(std::move(j));
  }
  nlohmann::json out{{"nodes", nodes}, {"root", root}};
  return out.dump();
}

std::size_t ShapedExpr::size() const {
  std::size_t s = 1;
  for (const auto& k : kids) s += k.size();
  return s;
}

NodeId normalize_into(Dag& dag, const ShapedExpr& tree) {
  Node n;
  n.op = tree.op;
  n.shape = tree.shape;
  n.value = tree.value;
  n.name = tree.name;
  n.fn = tree.fn;
  n.kids.reserve(tree.kids.size());
  for (const auto& k : tree.kids) n.kids.push_back(normalize_into(dag, k));
  return dag.intern(std::move(n));
}

NormalizedDag normalize(const ShapedExpr& tree) {
  NormalizedDag out;
  out.dag = std::make_shared<Dag>();
  out.root = normalize_into(*out.dag, tree);
  for (NodeId id : out.dag->reachable(out.root))
    if ((*out.dag)[id].op == Op::Symbol) out.leaves[(*out.dag)[id].name] = id;
  return out;
}

NormalizedDag simplify(const NormalizedDag& d, RangeHint hint) {
  Builder b(*d.dag, std::move(hint));
  NormalizedDag out;
  out.dag = d.dag;
  out.root = b.simplify(d.root);
  for (NodeId id : out.dag->reachable(out.root))
    if ((*out.dag)[id].op == Op::Symbol) out.leaves[(*out.dag)[id].name] = id;
  return out;
}

}  // namespace convexcert
