#pragma once

// Disciplined convex programming baseline: curvature labels propagated over
// the expression as written, using an atom table with known curvature and
// monotonicity.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convexcert/certificate.hpp"
#include "convexcert/dag.hpp"

namespace convexcert {

/// constant and affine are both convex and concave.
enum class Curvature { Constant, Affine, Convex, Concave, Unknown };
enum class Monotonicity { Increasing, Decreasing, None };

std::string_view curvature_name(Curvature c);
/// Curvature of -f.
Curvature negate(Curvature c);
/// Least upper bound; the curvature of a sum.
Curvature join(Curvature a, Curvature b);
bool is_convex(Curvature c);
bool is_concave(Curvature c);

struct AtomInfo {
  std::string name;
  Curvature curvature = Curvature::Unknown;
  /// Monotonicity given the range of the argument, for atoms such as x^2
  /// whose direction depends on its sign.
  std::function<Monotonicity(const Interval&)> monotonicity;
  Interval range;
};

/// exp, log, sqrt, sum, norm2. The power atoms are built per exponent by
/// power_atom.
const std::vector<AtomInfo>& atom_table();
const AtomInfo* find_atom(std::string_view name);
/// x^p on a base with range `base`; nullopt when no curvature is known there.
std::optional<AtomInfo> power_atom(const std::optional<Rational>& p, const Interval& exponent, const Interval& base);

/// Rules 2 to 4: curvature of f(g) from f's curvature and monotonicity and
/// g's curvature.
Curvature compose(Curvature f, Monotonicity m, Curvature g);

struct DcpOptions {
  /// Adds logistic, log_sum_exp, neg_entr, sum_squares and quad_form,
  /// recognized by their expression pattern.
  bool extended_atoms = false;
};

/// Post-order labeling of one expression. Symbols other than `wrt` are
/// constants; `facts` provides the signs of constants and arguments.
class DcpLabeler {
 public:
  DcpLabeler(const NormalizedDag& dag, std::string wrt, const DomainFacts& facts, DcpOptions options = {});

  Curvature label(NodeId v);
  /// One entry per labeled node, children first.
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  Curvature compute(NodeId v, std::string& rule);
  Curvature scaled(NodeId constant, Curvature f, bool reciprocal);
  std::optional<Curvature> extended(NodeId v, std::string& rule);
  bool constant(NodeId v) { return label(v) == Curvature::Constant; }

  NormalizedDag dag_;
  std::string wrt_;
  DcpOptions options_;
  Builder b_;
  std::unordered_map<NodeId, Curvature> memo_;
  std::vector<TraceEntry> trace_;
};

Curvature dcp_label(const NormalizedDag& dag, NodeId v, const std::string& wrt, const DomainFacts& facts,
                    DcpOptions options = {});

/// Verdict from the root label: convex, concave, affine (constant or
/// affine) or unknown, with the first unknown node as the blocking node.
Certificate dcp_certify(const NormalizedDag& dag, const std::string& wrt, const DomainFacts& facts,
                        DcpOptions options = {});

}  // namespace convexcert
