#include "anisotikh/types.hpp"

namespace anisotikh {

Vector pack_gamma(const OrientationField& theta, double mu) {
  if (!std::isfinite(mu)) throw ParameterError("pack_gamma: mu must be finite");
  const Index n = theta.theta.size();
  Vector gamma(n + 1);
  gamma.head(n) = theta.theta;
  gamma[n] = mu;
  return gamma;
}

InversionVector unpack_gamma(const Grid& grid, const Vector& gamma) {
  if (gamma.size() != grid.n() + 1)
    throw DimensionError("unpack_gamma: vector length " +
                         std::to_string(gamma.size()) + " does not match N+1=" +
                         std::to_string(grid.n() + 1));
  return InversionVector(OrientationField(grid, gamma.head(grid.n())),
                         gamma[grid.n()]);
}

Vector project_box(const Vector& gamma) {
  if (!gamma.allFinite()) throw ParameterError("project_box: non-finite input");
  Vector out = gamma;
  const Index n = gamma.size() - 1;
  for (Index i = 0; i < n; ++i)
    out[i] = std::clamp(out[i], -kHalfPi, kHalfPi);
  out[n] = std::max(out[n], 0.0);
  return out;
}

}  // namespace anisotikh
