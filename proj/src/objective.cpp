#include "bdd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdd/errors.hpp"
#include "bdd/spectral_ops.hpp"

namespace bdd {

CoherenceReport coherences(const MeasurementEnsemble &ens,
                           const BlockFactorPair &z) {
  const Dimensions &d = ens.dims();
  z.validate(d);
  CoherenceReport rep;
  rep.d_n.reserve(static_cast<std::size_t>(d.N));
  for (int n = 0; n < d.N; ++n) {
    const CVector &h = z.channels[n];
    const CVector &x = z.coefficients[n];
    const double hh = h.squaredNorm();
    const double xx = x.squaredNorm();
    if (hh == 0.0 || xx == 0.0)
      throw DegenerateInput("coherences undefined for a zero factor (component " +
                            std::to_string(n) + ")");
    const double spec_peak =
        partial_dft_apply(d.L, h).cwiseAbs2().maxCoeff();
    const double coded_peak =
        real_times(ens.coding(n), x).cwiseAbs2().maxCoeff();
    rep.mu_sq = std::max(rep.mu_sq, d.L * spec_peak / hh);
    rep.nu_sq = std::max(rep.nu_sq, d.Q * coded_peak / xx);
    rep.d_n.push_back(std::sqrt(hh * xx));
  }
  rep.nu_max_sq = coding_row_coherence(ens);
  double sum_sq = 0.0;
  for (double dn : rep.d_n)
    sum_sq += dn * dn;
  rep.d0 = std::sqrt(sum_sq);
  const auto [lo, hi] = std::minmax_element(rep.d_n.begin(), rep.d_n.end());
  rep.kappa = *hi / *lo;
  return rep;
}

double coding_row_coherence(const MeasurementEnsemble &ens) {
  double peak = 0.0;
  for (int n = 0; n < ens.dims().N; ++n)
    peak = std::max(peak, ens.coding(n).rowwise().squaredNorm().maxCoeff());
  return ens.dims().Q * peak;
}

void PenaltyParams::validate(int components) const {
  if (!(rho > 0.0) || !(d > 0.0))
    throw InvalidArgument("penalty requires rho > 0 and d > 0");
  if (!(mu > 0.0) || !(nu > 0.0))
    throw InvalidArgument("penalty requires positive coherence bounds");
  if (d_n.size() != static_cast<std::size_t>(components))
    throw InvalidArgument("penalty needs one scale d_n per component");
  for (double v : d_n)
    if (!(v > 0.0))
      throw InvalidArgument("penalty scales d_n must be positive");
}

double g0(double z) {
  const double t = std::max(z - 1.0, 0.0);
  return t * t;
}

double g0_prime(double z) { return 2.0 * std::max(z - 1.0, 0.0); }

namespace {

CVector residual(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                 const ObservationVector &y) {
  y.validate(ens.dims());
  return forward_map(ens, z) - y.samples;
}

BlockFactorPair measurement_gradient_from(const MeasurementEnsemble &ens,
                                          const BlockFactorPair &z,
                                          const CVector &res) {
  BlockFactorPair g;
  g.channels.reserve(z.channels.size());
  g.coefficients.reserve(z.coefficients.size());
  for (int n = 0; n < ens.dims().N; ++n) {
    auto [gh, gx] = adjoint_products(ens, n, res, z.channels[n], z.coefficients[n]);
    g.channels.push_back(std::move(gh));
    g.coefficients.push_back(std::move(gx));
  }
  return g;
}

// Hinge arguments of one component, shared by value and gradient.
struct HingeArgs {
  double h_norm = 0.0;
  double x_norm = 0.0;
  RVector spectral; // L |f_l^* h|^2 / (8 d mu^2)
  RVector coded;    // Q |c_q^* x|^2 / (8 d nu^2)
  CVector h_spectrum;
  CVector coded_signal;
};

HingeArgs hinge_args(const MeasurementEnsemble &ens, int n, const CVector &h,
                     const CVector &x, const PenaltyParams &p) {
  const Dimensions &d = ens.dims();
  const double dn = p.d_n[static_cast<std::size_t>(n)];
  HingeArgs a;
  a.h_norm = h.squaredNorm() / (2.0 * dn);
  a.x_norm = x.squaredNorm() / (2.0 * dn);
  a.h_spectrum = partial_dft_apply(d.L, h);
  a.coded_signal = real_times(ens.coding(n), x);
  a.spectral = a.h_spectrum.cwiseAbs2() * (d.L / (8.0 * dn * p.mu * p.mu));
  a.coded = a.coded_signal.cwiseAbs2() * (d.Q / (8.0 * dn * p.nu * p.nu));
  return a;
}

double hinge_sum(const RVector &v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    acc += g0(v[i]);
  return acc;
}

RVector hinge_slopes(const RVector &v) {
  return v.unaryExpr([](double t) { return g0_prime(t); });
}

} // namespace

double loss_measurement(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                        const ObservationVector &y) {
  return residual(ens, z, y).squaredNorm();
}

namespace {

// Penalty value and, when `grad` is given, its gradient from one set of
// hinge arguments per component.
double penalty_pass(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                    const PenaltyParams &p, BlockFactorPair *grad) {
  const Dimensions &d = ens.dims();
  z.validate(d);
  p.validate(d.N);
  if (grad)
    *grad = BlockFactorPair::zeros(d);
  double acc = 0.0;
  for (int n = 0; n < d.N; ++n) {
    const CVector &h = z.channels[n];
    const CVector &x = z.coefficients[n];
    const HingeArgs a = hinge_args(ens, n, h, x, p);
    acc += g0(a.h_norm) + g0(a.x_norm) + hinge_sum(a.spectral) +
           hinge_sum(a.coded);
    if (!grad)
      continue;
    const double dn = p.d_n[static_cast<std::size_t>(n)];
    const double outer = p.rho / (2.0 * dn);

    CVector gh = g0_prime(a.h_norm) * h;
    const RVector ws = hinge_slopes(a.spectral);
    if ((ws.array() != 0.0).any()) {
      // sum_l w_l f_l f_l^* h = F_M^* (w .* F_M h)
      const CVector weighted = ws.cast<cplx>().cwiseProduct(a.h_spectrum);
      gh += (d.L / (4.0 * p.mu * p.mu)) * partial_dft_adjoint(d.L, weighted, d.M);
    }
    grad->channels[n] = outer * gh;

    CVector gx = g0_prime(a.x_norm) * x;
    const RVector wc = hinge_slopes(a.coded);
    if ((wc.array() != 0.0).any()) {
      const CVector weighted = wc.cast<cplx>().cwiseProduct(a.coded_signal);
      gx += (d.Q / (4.0 * p.nu * p.nu)) *
            real_transpose_times(ens.coding(n), weighted);
    }
    grad->coefficients[n] = outer * gx;
  }
  return p.rho * acc;
}

} // namespace

double penalty(const MeasurementEnsemble &ens, const BlockFactorPair &z,
               const PenaltyParams &p) {
  return penalty_pass(ens, z, p, nullptr);
}

BlockFactorPair grad_measurement(const MeasurementEnsemble &ens,
                                 const BlockFactorPair &z,
                                 const ObservationVector &y) {
  return measurement_gradient_from(ens, z, residual(ens, z, y));
}

BlockFactorPair grad_penalty(const MeasurementEnsemble &ens,
                             const BlockFactorPair &z, const PenaltyParams &p) {
  BlockFactorPair g;
  penalty_pass(ens, z, p, &g);
  return g;
}

ObjectiveValue objective(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                         const ObservationVector &y, const PenaltyParams &p) {
  return {loss_measurement(ens, z, y), penalty(ens, z, p)};
}

PointEval evaluate_point(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                         const ObservationVector &y, const PenaltyParams &p) {
  PointEval out;
  out.residual = residual(ens, z, y);
  out.value.F = out.residual.squaredNorm();
  out.value.G = penalty_pass(ens, z, p, nullptr);
  return out;
}

ObjectiveEval gradient_at(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                          const PenaltyParams &p, const PointEval &at) {
  if (at.residual.size() != ens.dims().L)
    throw InvalidArgument("gradient_at: residual must have length L");
  ObjectiveEval out;
  BlockFactorPair pen_grad;
  out.value.F = at.value.F;
  out.value.G = penalty_pass(ens, z, p, &pen_grad);
  out.gradient = measurement_gradient_from(ens, z, at.residual);
  out.gradient += pen_grad;
  return out;
}

ObjectiveEval objective_with_gradient(const MeasurementEnsemble &ens,
                                      const BlockFactorPair &z,
                                      const ObservationVector &y,
                                      const PenaltyParams &p) {
  return gradient_at(ens, z, p, evaluate_point(ens, z, y, p));
}

NeighborhoodFlags neighborhood_membership(const MeasurementEnsemble &ens,
                                          const BlockFactorPair &z,
                                          const BlockFactorPair &truth,
                                          double eps, double shrink) {
  const CoherenceReport rep = coherences(ens, truth);
  NeighborhoodReference ref{rep.d_n, std::sqrt(rep.mu_sq), std::sqrt(rep.nu_sq)};
  return neighborhood_membership(ens, z, truth, eps, ref, shrink);
}

NeighborhoodFlags neighborhood_membership(const MeasurementEnsemble &ens,
                                          const BlockFactorPair &z,
                                          const BlockFactorPair &truth,
                                          double eps,
                                          const NeighborhoodReference &ref,
                                          double shrink) {
  const Dimensions &d = ens.dims();
  z.validate(d);
  truth.validate(d);
  if (ref.d_n0.size() != static_cast<std::size_t>(d.N))
    throw InvalidArgument("neighborhood reference needs one d_n0 per component");
  NeighborhoodFlags f{true, true, true, true};
  const double sqrt_l = std::sqrt(static_cast<double>(d.L));
  const double sqrt_q = std::sqrt(static_cast<double>(d.Q));
  for (int n = 0; n < d.N; ++n) {
    const double dn0 = ref.d_n0[static_cast<std::size_t>(n)];
    const double root = std::sqrt(dn0);
    const CVector &h = z.channels[n];
    const CVector &x = z.coefficients[n];
    if (h.norm() > shrink * 2.0 * root || x.norm() > shrink * 2.0 * root)
      f.norm = false;
    const double spec_peak = partial_dft_apply(d.L, h).cwiseAbs().maxCoeff();
    if (sqrt_l * spec_peak > shrink * 4.0 * ref.mu * root)
      f.mu = false;
    const double coded_peak =
        real_times(ens.coding(n), x).cwiseAbs().maxCoeff();
    if (sqrt_q * coded_peak > shrink * 4.0 * ref.nu * root)
      f.nu = false;
    const double dist = std::sqrt(lifted_distance_squared(
        h, x, truth.channels[n], truth.coefficients[n]));
    if (dist > eps * dn0)
      f.eps = false;
  }
  return f;
}

} // namespace bdd
