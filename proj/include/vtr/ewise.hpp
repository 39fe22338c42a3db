#pragma once

#include <string_view>

#include "vtr/matrix.hpp"

namespace vtr {

/// Functions available to the element-wise unit. identity, gelu and exp are
/// the activation set; reciprocal and rsqrt complete the divisions needed by
/// softmax and layer norm.
enum class EwiseFn { identity, gelu, exp, reciprocal, rsqrt };

std::string_view to_string(EwiseFn f);

/// Exact (erf-based) GELU.
float gelu(float x);

float apply(EwiseFn f, float x);

/// f(a * mul + add) element-wise. Absent operands act as the multiplicative
/// or additive identity (pass nullptr).
Matrix ewise_ref(EwiseFn f, const Matrix* mul, const Matrix* add, const Matrix& a);

}  // namespace vtr
