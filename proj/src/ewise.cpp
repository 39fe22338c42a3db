#include "vtr/ewise.hpp"

#include <cmath>

#include "vtr/errors.hpp"

namespace vtr {

std::string_view to_string(EwiseFn f) {
  switch (f) {
    case EwiseFn::identity: return "identity";
    case EwiseFn::gelu: return "gelu";
    case EwiseFn::exp: return "exp";
    case EwiseFn::reciprocal: return "reciprocal";
    case EwiseFn::rsqrt: return "rsqrt";
  }
  return "?";
}

float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752440f));
}

float apply(EwiseFn f, float x) {
  switch (f) {
    case EwiseFn::identity: return x;
    case EwiseFn::gelu: return gelu(x);
    case EwiseFn::exp: return std::exp(x);
    case EwiseFn::reciprocal: return 1.0f / x;
    case EwiseFn::rsqrt: return 1.0f / std::sqrt(x);
  }
  return x;
}

Matrix ewise_ref(EwiseFn f, const Matrix* mul, const Matrix* add, const Matrix& a) {
  auto same_shape = [&](const Matrix* m) {
    return m == nullptr || (m->rows() == a.rows() && m->cols() == a.cols());
  };
  if (!same_shape(mul) || !same_shape(add)) {
    throw DimensionMismatch("ewise: operand shapes differ");
  }
  Matrix out(a.rows(), a.cols());
  auto o = out.values();
  auto av = a.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    float v = av[i];
    if (mul) v = v * mul->values()[i];
    if (add) v = v + add->values()[i];
    o[i] = apply(f, v);
  }
  return out;
}

}  // namespace vtr
