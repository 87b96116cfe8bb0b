#include "convexcert/certificate.hpp"

#include <sstream>

#include "json.hpp"

namespace convexcert {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Convex: return "convex";
    case Verdict::Concave: return "concave";
    case Verdict::Affine: return "affine";
    case Verdict::Unknown: return "unknown";
    case Verdict::NonConvexWitness: return "non-convex-witness";
  }
  return "?";
}

std::string_view method_name(Method m) { return m == Method::Hessian ? "hessian" : "dcp"; }

std::string Certificate::to_json() const {
  using nlohmann::json;
  json j;
  j["verdict"] = verdict_name(verdict);
  j["method"] = method_name(method);
  j["expression"] = expression;
  j["wrt"] = wrt;
  if (method == Method::Hessian) j["hessian"] = hessian_text;
  json t = json::array();
  for (const TraceEntry& e : trace) {
    json je{{"node", e.node}, {"expr", e.expr}, {"value", e.value}, {"rule", e.rule}};
    if (!e.bindings.empty()) je["bindings"] = e.bindings;
    t.push_back(std::move(je));
  }
  j["trace"] = std::move(t);
  j["blocking_node"] = blocking_node ? json(*blocking_node) : json(nullptr);
  if (witness) {
    json w;
    w["eigenvalue"] = witness->eigenvalue;
    w["point"] = witness->point;
    j["witness"] = std::move(w);
  } else {
    j["witness"] = nullptr;
  }
  return j.dump(2);
}

std::string Certificate::to_text() const {
  std::ostringstream out;
  out << "verdict: ";
  if (verdict == Verdict::Unknown) out << "unknown (not certified)";
  else out << verdict_name(verdict);
  out << "\nmethod: " << method_name(method) << "\n";
  if (method == Method::Hessian) out << "hessian: " << hessian_text << "\n";
  out << "trace:\n";
  for (const TraceEntry& e : trace) {
    out << (blocking_node && *blocking_node == e.node ? "  >> " : "     ") << "[" << e.node << "] " << e.expr
        << "  " << e.value << "  (" << e.rule;
    for (const auto& [k, v] : e.bindings) out << "; " << k << " = " << v;
    out << ")\n";
  }
  if (blocking_node) out << "blocking node: [" << *blocking_node << "]\n";
  if (witness) {
    out << "witness: eigenvalue " << witness->eigenvalue << " at";
    for (const auto& [name, vals] : witness->point) {
      out << " " << name << " = ";
      if (vals.size() == 1) {
        out << vals[0];
      } else {
        out << "[";
        for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? ", " : "") << vals[i];
        out << "]";
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace convexcert
