#pragma once

namespace secmec {

/// Perspective of log(1 + x): y * ln(1 + x / y), jointly concave on the
/// nonnegative orthant, 0 on the boundary y = 0.
double entropy(double x, double y);

struct EntropyGradient {
  double dx;
  double dy;
};

/// Gradient at (x0, y0); y0 must be strictly positive.
EntropyGradient entropy_gradient(double x0, double y0);

/// Hessian entries (xx, xy, yy) at (x, y), y > 0. Rank one, negative semidefinite.
struct EntropyHessian {
  double xx;
  double xy;
  double yy;
};
EntropyHessian entropy_hessian(double x, double y);

}  // namespace secmec
