#pragma once

// Verdicts and the per-node evidence that backs them.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace convexcert {

enum class Verdict { Convex, Concave, Affine, Unknown, NonConvexWitness };
enum class Method { Hessian, Dcp };

std::string_view verdict_name(Verdict v);
std::string_view method_name(Method m);

/// One rule firing. `value` is an interval such as "(0,inf)" for scalar and
/// vector nodes, a psd/nsd/zero/indefinite tag for matrix nodes, or a
/// curvature label for the dcp method.
struct TraceEntry {
  unsigned node = 0;
  std::string expr;
  std::string value;
  std::string rule;
  std::map<std::string, std::string> bindings;
};

/// A feasible point at which the Hessian has a negative eigenvalue.
struct Witness {
  std::map<std::string, std::vector<double>> point;
  double eigenvalue = 0;
};

struct Certificate {
  Verdict verdict = Verdict::Unknown;
  Method method = Method::Hessian;
  std::string expression;
  std::string wrt;
  std::vector<TraceEntry> trace;
  std::string hessian_text;  // hessian method only
  std::optional<unsigned> blocking_node;
  std::optional<Witness> witness;

  /// JSON document; the schema is described in the README.
  std::string to_json() const;
  std::string to_text() const;
};

}  // namespace convexcert
