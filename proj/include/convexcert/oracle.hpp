#pragma once

// Concrete numeric evaluation of DAGs: the brute-force oracle used to
// validate the symbolic phases.

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convexcert/dag.hpp"
#include "convexcert/lang.hpp"
#include "convexcert/shape.hpp"

namespace convexcert {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scalars are 1x1, vectors k x 1, row vectors 1 x k.
using Value = Eigen::MatrixXd;

struct Binding {
  std::map<std::string, Value> values;
  std::map<std::string, int> dims;  // symbolic dimension -> concrete size

  int dim(const std::string& name) const;
};

struct SampleConfig {
  int trials = 1;
  std::map<std::string, int> dims;  // sizes for symbolic dims; others get default_dim
  int default_dim = 4;
  std::uint64_t seed = 0;
  double margin = 1e-3;
  double box = 3.0;
};

/// Throws EvalError at points outside an operator's domain (log of a
/// nonpositive number, division by zero, ...).
Value evaluate(const Dag& dag, NodeId root, const Binding& binding);
double evaluate_scalar(const Dag& dag, NodeId root, const Binding& binding);

/// Draws one binding uniformly from each symbol's feasible box. Compound
/// assumption subjects are enforced by rejection. Matrix symbols bounded
/// below by 0 are sampled positive semidefinite.
Binding sample_feasible(const SymbolTable& symbols, const std::vector<lang::Assumption>& assumptions,
                        const SampleConfig& config, std::mt19937_64& rng);

/// Checks every assumption at the binding.
bool satisfies(const SymbolTable& symbols, const std::vector<lang::Assumption>& assumptions, const Binding& b);

/// Step for coordinate i: h * (1 + |x_i|).
Eigen::VectorXd finite_diff_gradient(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                     double h = 1e-5);
/// Central second differences of a scalar root, symmetrized.
Eigen::MatrixXd finite_diff_hessian(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                    double h = 1e-4);
/// Central differences of a vector (or scalar) root; column j is d/dx_j.
Eigen::MatrixXd finite_diff_jacobian(const Dag& dag, NodeId root, const std::string& wrt, const Binding& b,
                                     double h = 1e-5);

/// Smallest eigenvalue of the symmetrized Hessian value at the binding.
double min_quadratic_form(const Dag& dag, NodeId hessian, const Binding& b);

}  // namespace convexcert
