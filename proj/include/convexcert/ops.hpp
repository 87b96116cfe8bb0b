#pragma once

#include <optional>
#include <string_view>

namespace convexcert {

/// Elementary functions applied elementwise.
enum class FnKind {
  Exp, Log, Sqrt, Sin, Cos, Tan, Sinh, Cosh, Tanh, Arccos, Arcsin, Arctan, Abs, Sign
};

/// Every callable name accepted by the language, including the structural
/// ones (sum, diag, norm2, vector) that are not elementwise.
enum class CallKind {
  Exp, Log, Sqrt, Sin, Cos, Tan, Sinh, Cosh, Tanh, Arccos, Arcsin, Arctan, Abs, Sign,
  Sum, Diag, Norm2, Vector
};

std::optional<CallKind> call_from_name(std::string_view name);
std::string_view call_name(CallKind c);
std::optional<FnKind> as_fn(CallKind c);
std::string_view fn_name(FnKind f);
bool is_differentiable(FnKind f);

}  // namespace convexcert
