#pragma once

// End-to-end driver shared by the CLI and the tests: text in, certificates
// and sampling reports out.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convexcert/certificate.hpp"
#include "convexcert/dcp.hpp"
#include "convexcert/oracle.hpp"
#include "convexcert/positivity.hpp"

namespace convexcert {

/// One certification request as written on the command line or in a corpus
/// line. Empty `wrt` selects x.
struct Problem {
  std::string expression;
  std::string assumptions;
  std::string dims;
  std::string wrt;
};

/// Any user-facing input problem: syntax, shapes, unknown wrt, contradictory
/// assumptions. `position` is a byte offset into the expression when known.
struct InputError : std::runtime_error {
  InputError(const std::string& what, std::optional<std::size_t> pos = std::nullopt)
      : std::runtime_error(what), position(pos) {}
  std::optional<std::size_t> position;
};

struct Prepared {
  Problem problem;
  SymbolTable symbols;
  std::vector<lang::Assumption> assumptions;
  NormalizedDag dag;
  Variable wrt;
  DomainFacts facts;
};

/// Parses and shapes the problem. Undeclared symbols become scalar
/// parameters. Throws InputError.
Prepared prepare(const Problem& problem);

Certificate certify_hessian(const Prepared& p, CertifyStats* stats = nullptr);
Certificate certify_dcp(const Prepared& p, DcpOptions options = {});

/// Hessian of the objective in the prepared arena.
NodeId hessian_node(const Prepared& p);

struct SamplingReport {
  std::size_t samples = 0;  // feasible points where the Hessian was finite
  double min_eigenvalue = Interval::kInf;
  double scale = 0;         // largest |H_ij| seen
  std::optional<Witness> witness;
};

/// Smallest Hessian eigenvalue over feasible points. With `probes`, points
/// where every entry of the variable equals one of -1, 1, -2, 2, -0.5, 0.5,
/// -3, 3 are tried before the random ones. A witness is recorded at the
/// first eigenvalue below -tol * (1 + scale).
SamplingReport sample_hessian(const Prepared& p, const SampleConfig& config, bool probes, double tol = 1e-8);

}  // namespace convexcert
