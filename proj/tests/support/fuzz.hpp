#pragma once

// Random differentiable expressions for property tests. Generation is typed
// by intended curvature so that a good share of the output is dcp-convex.

#include <random>
#include <string>

namespace convexcert::testing {

struct FuzzCase {
  std::string expression;
  std::string dims;  // "x:n" for vector cases, empty for scalar ones
};

FuzzCase fuzz_expression(std::mt19937_64& rng);

}  // namespace convexcert::testing
