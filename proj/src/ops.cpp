#include "convexcert/ops.hpp"

#include <array>
#include <utility>

namespace convexcert {
namespace {

constexpr std::array<std::pair<std::string_view, CallKind>, 18> kCalls{{
    {"exp", CallKind::Exp},       {"log", CallKind::Log},         {"sqrt", CallKind::Sqrt},
    {"sin", CallKind::Sin},       {"cos", CallKind::Cos},         {"tan", CallKind::Tan},
    {"sinh", CallKind::Sinh},     {"cosh", CallKind::Cosh},       {"tanh", CallKind::Tanh},
    {"arccos", CallKind::Arccos}, {"arcsin", CallKind::Arcsin},   {"arctan", CallKind::Arctan},
    {"abs", CallKind::Abs},       {"sign", CallKind::Sign},       {"sum", CallKind::Sum},
    {"diag", CallKind::Diag},     {"norm2", CallKind::Norm2},     {"vector", CallKind::Vector},
}};

}  // namespace

std::optional<CallKind> call_from_name(std::string_view name) {
  for (const auto& [n, k] : kCalls)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view call_name(CallKind c) {
  for (const auto& [n, k] : kCalls)
    if (k == c) return n;
  return "?";
}

std::optional<FnKind> as_fn(CallKind c) {
  switch (c) {
    case CallKind::Sum:
    case CallKind::Diag:
    case CallKind::Norm2:
    case CallKind::Vector:
      return std::nullopt;
    default:
      return static_cast<FnKind>(static_cast<int>(c));
  }
}

std::string_view fn_name(FnKind f) { return call_name(static_cast<CallKind>(static_cast<int>(f))); }

bool is_differentiable(FnKind f) { return f != FnKind::Abs && f != FnKind::Sign; }

}  // namespace convexcert
