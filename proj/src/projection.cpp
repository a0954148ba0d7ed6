#include <algorithm>
#include <cmath>

#include "bdd/errors.hpp"
#include "bdd/solver.hpp"
#include "bdd/spectral_ops.hpp"

namespace bdd {

DftSliceBasis::DftSliceBasis(int L, int width) : length_(L), width_(width) {
  if (L < 1 || width < 1 || width > L)
    throw InvalidArgument("DFT slice needs 1 <= width <= L");
}

CVector DftSliceBasis::apply(const CVector &z) const {
  if (z.size() != width_)
    throw InvalidArgument("DFT slice input has the wrong length");
  return partial_dft_apply(length_, z);
}

CVector DftSliceBasis::adjoint(const CVector &v) const {
  return partial_dft_adjoint(length_, v, width_);
}

CodingBasis::CodingBasis(RMatrix coding) : coding_(std::move(coding)) {
  if (coding_.rows() < coding_.cols() || coding_.cols() < 1)
    throw InvalidArgument("coding basis must be tall");
}

CVector CodingBasis::apply(const CVector &z) const {
  if (z.size() != coding_.cols())
    throw InvalidArgument("coding basis input has the wrong length");
  return real_times(coding_, z);
}

CVector CodingBasis::adjoint(const CVector &v) const {
  if (v.size() != coding_.rows())
    throw InvalidArgument("coding basis adjoint input has the wrong length");
  return real_transpose_times(coding_, v);
}

namespace {

// Entrywise complex shrinkage toward zero by radius t.
CVector soft_threshold(const CVector &v, double t) {
  CVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    out[i] = mag > t ? v[i] * ((mag - t) / mag) : cplx(0.0, 0.0);
  }
  return out;
}

CVector clip(const CVector &v, double t) {
  CVector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > t)
      out[i] = v[i] * (t / mag);
  }
  return out;
}

double peak(const IncoherenceBasis &basis, const CVector &z) {
  return basis.apply(z).cwiseAbs().maxCoeff();
}

} // namespace

ProjectionResult project_incoherent(const CVector &g, const IncoherenceBasis &basis,
                                    double bound, const ProjectionOptions &opts) {
  if (!(bound > 0.0))
    throw InvalidArgument("projection bound must be positive");
  if (g.size() != basis.cols())
    throw InvalidArgument("projection input length does not match the basis");
  if (!(opts.tol > 0.0) || opts.max_iters < 1)
    throw InvalidArgument("projection tolerance and iteration cap must be positive");

  // constraint in unscaled units: |(B z)_i| <= radius
  const double radius = bound / std::sqrt(static_cast<double>(basis.rows()));
  ProjectionResult res;
  const CVector bg = basis.apply(g);
  if (bg.cwiseAbs().maxCoeff() <= radius) {
    res.point = g;
    res.converged = true;
    return res;
  }
  if (opts.closed_form_when_square && basis.is_square()) {
    res.point = basis.adjoint(clip(bg, radius));
    res.converged = true;
    return res;
  }

  // Dual: min_l 1/2 ||B^* l||^2 - Re<l, B g> + radius ||l||_1, primal
  // z(l) = g - B^* l. The smooth part has unit Lipschitz constant.
  const double scale = std::max(1.0, g.norm());
  CVector lambda = CVector::Zero(basis.rows());
  CVector extrap = lambda;
  CVector z = g;
  double momentum = 1.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const CVector z_extrap = g - basis.adjoint(extrap);
    const CVector lambda_next = soft_threshold(extrap + basis.apply(z_extrap), radius);
    const CVector z_next = g - basis.adjoint(lambda_next);
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const CVector delta = lambda_next - lambda;
    if ((extrap - lambda_next).dot(delta).real() > 0.0) {
      // gradient restart
      extrap = lambda_next;
      momentum = 1.0;
    } else {
      extrap = lambda_next + ((momentum - 1.0) / momentum_next) * delta;
      momentum = momentum_next;
    }
    const double moved = (z_next - z).norm();
    lambda = lambda_next;
    z = z_next;
    res.iterations = it;
    const double violation = std::sqrt(static_cast<double>(basis.rows())) *
                             std::max(0.0, peak(basis, z) - radius);
    if (moved <= opts.tol * scale && violation <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  // pull back along the ray toward the feasible origin
  const double p = peak(basis, z);
  if (p > radius)
    z *= radius / p;
  res.point = z;
  return res;
}

} // namespace bdd
