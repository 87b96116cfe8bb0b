#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <map>
#include <string>
#include <vector>

#include "convexcert/pipeline.hpp"

namespace convexcert::testing {

struct CorpusItem {
  std::size_t line = 0;
  Problem problem;
  std::string expected;
};

std::vector<CorpusItem> load_corpus(const std::string& path = CONVEXCERT_CORPUS);

Prepared prep(const std::string& expr, const std::string& assume = "", const std::string& dims = "",
              const std::string& wrt = "");

/// Parses `text` against p's symbols into p's arena and simplifies it.
NodeId simplified(const Prepared& p, const std::string& text);
// Renders text after parsing and simplifying, so expected bindings compare in canonical form.
std::string canonical_text(const std::string& text, const std::string& dims);

/// Interval and template matches of a hand-entered matrix expression.
struct MatrixAnalysis {
  Interval interval;
  std::vector<std::map<std::string, std::string>> matches;  // rendered bindings
  std::vector<TemplateId> ids;
};
MatrixAnalysis analyze_matrix(const std::string& text, const std::string& dims, const std::string& assume = "");

/// Rendered bindings of every template match in a certificate trace.
std::vector<std::map<std::string, std::string>> trace_matches(const Certificate& c);

/// Largest |H - H_fd| / (1 + |H|) entrywise over `points` feasible samples.
double hessian_fd_error(const Prepared& p, int points, std::uint64_t seed);

}  // namespace convexcert::testing
