#pragma once

// Interval propagation over Hessian DAGs and the convexity certificate built
// from it.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "convexcert/calculus.hpp"
#include "convexcert/certificate.hpp"
#include "convexcert/dag.hpp"
#include "convexcert/lang.hpp"
#include "convexcert/templates.hpp"

namespace convexcert {

/// Canonical ids of the assumption subjects with their intervals. Clauses on
/// the same subject are intersected; throws EmptyDomain when they contradict.
DomainFacts assumption_facts(Builder& b, const SymbolTable& symbols, const std::vector<lang::Assumption>& clauses);

/// Intersects two fact tables, throwing EmptyDomain on a contradiction.
DomainFacts merge_facts(DomainFacts a, const DomainFacts& b);

/// Interval of a leaf: its facts entry, or the whole line.
Interval leaf_interval(const Dag& dag, NodeId leaf, const RangeHint& facts);

/// Interval combination for one node from its children's intervals.
inline Interval combine_intervals(const Dag& dag, NodeId id, const std::vector<Interval>& kids) {
  return combine_node(dag, id, kids);
}

/// Proves a scalar or elementwise sum nonnegative or nonpositive by factoring
/// out positive common factors and deciding Laurent polynomial groups exactly.
/// Returns nonneg() or nonpos() on success.
std::optional<Interval> decide_sign(Builder& b, NodeId sum, const IntervalFn& iv);

/// Exact check that sum_k c_k x^e_k >= 0 for all x in `domain`.
bool laurent_nonneg(const std::vector<std::pair<Rational, Rational>>& terms, const Interval& domain);

struct PositivityStep {
  NodeId node = 0;
  Interval interval;
  std::string rule;
  std::vector<TemplateMatch> matches;
};

/// Interval analysis of one DAG. determine_interval is memoized, so each
/// node's body runs once; helper nodes created while matching are handled by
/// a separate uncounted pass.
class Positivity {
 public:
  Positivity(Builder& b, RangeHint facts);

  Interval determine_interval(NodeId v);
  /// Interval of a node that need not belong to the analyzed DAG.
  Interval interval_of(NodeId v);
  /// [0,1] for num/den when 0 <= num <= den and den > 0.
  std::optional<Interval> ratio_bound(NodeId num, NodeId den);

  std::size_t visits() const { return visits_; }
  /// Rule firings in evaluation order (children first).
  const std::vector<PositivityStep>& steps() const { return steps_; }
  const PositivityStep* step(NodeId v) const;

 private:
  Interval aux(NodeId v);
  Interval finish(NodeId v, Interval r);
  std::optional<std::pair<Interval, std::vector<TemplateMatch>>> analyze_matrix_sum(NodeId v);
  IntervalFn iv();

  Builder& b_;
  RangeHint facts_;
  std::unordered_map<NodeId, Interval> memo_;
  std::unordered_map<NodeId, Interval> aux_memo_;
  std::unordered_map<NodeId, std::size_t> step_index_;
  std::vector<PositivityStep> steps_;
  std::size_t visits_ = 0;
};

struct CertifyStats {
  std::size_t visits = 0;
  std::size_t dag_nodes = 0;
  NodeId hessian = 0;
  Interval root;
};

/// Hessian, simplification and interval propagation; verdict convex when the
/// Hessian's interval lies in [0,inf), concave in (-inf,0], unknown otherwise.
Certificate certify(const NormalizedDag& dag, const Variable& wrt, const DomainFacts& assumptions,
                    CertifyStats* stats = nullptr);

/// Matrix nodes print as psd/nsd/zero/indefinite, others as intervals.
std::string interval_tag(const Shape& shape, const Interval& i);

}  // namespace convexcert
