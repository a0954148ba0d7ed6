#pragma once

#include <vector>

#include "bdd/types.hpp"

namespace bdd {

/// Incoherence and energy diagnostics of a factor pair.
struct CoherenceReport {
  double mu_sq = 0.0;     ///< max_n L ||F_M h_n||_inf^2 / ||h_n||^2, in [1, L]
  double nu_sq = 0.0;     ///< max_n Q ||C_n x_n||_inf^2 / ||x_n||^2, in [1, Q]
  double nu_max_sq = 0.0; ///< Q * largest squared row norm over all C_n
  double kappa = 1.0;     ///< max d_n / min d_n
  std::vector<double> d_n; ///< ||h_n|| ||x_n||
  double d0 = 0.0;        ///< sqrt(sum d_n^2)
};

/// Throws DegenerateInput when some h_n or x_n is zero.
CoherenceReport coherences(const MeasurementEnsemble &ens,
                           const BlockFactorPair &z);

/// Q * max squared row norm of the coding matrices. Diagnostic only.
double coding_row_coherence(const MeasurementEnsemble &ens);

/// Parameters of the incoherence/norm penalty G.
///
/// `mu` and `nu` are the coherence bounds themselves (not squared).
struct PenaltyParams {
  double rho = 1.0;
  double d = 1.0;
  std::vector<double> d_n;
  double mu = 1.0;
  double nu = 1.0;

  /// Throws InvalidArgument unless rho, d, mu, nu and every d_n are positive
  /// and there is one d_n per component.
  void validate(int components) const;
};

/// max(z - 1, 0)^2
double g0(double z);
/// 2 max(z - 1, 0)
double g0_prime(double z);

/// F = ||A(Z) - y||^2.
double loss_measurement(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                        const ObservationVector &y);

double penalty(const MeasurementEnsemble &ens, const BlockFactorPair &z,
               const PenaltyParams &p);

/// Wirtinger gradients (d/d conj) of F: A_n^*(r) x_n and A_n^*(r)^* h_n with
/// r = A(Z) - y.
BlockFactorPair grad_measurement(const MeasurementEnsemble &ens,
                                 const BlockFactorPair &z,
                                 const ObservationVector &y);

BlockFactorPair grad_penalty(const MeasurementEnsemble &ens,
                             const BlockFactorPair &z, const PenaltyParams &p);

struct ObjectiveValue {
  double F = 0.0;
  double G = 0.0;
  double total() const { return F + G; }
};

struct ObjectiveEval {
  ObjectiveValue value;
  BlockFactorPair gradient; ///< Wirtinger gradient of F + G
};

ObjectiveValue objective(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                         const ObservationVector &y, const PenaltyParams &p);

/// Objective value together with the residual A(z) - y it was computed from.
struct PointEval {
  ObjectiveValue value;
  CVector residual;
};

PointEval evaluate_point(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                         const ObservationVector &y, const PenaltyParams &p);

/// Gradient at z reusing a residual from evaluate_point at the same z.
ObjectiveEval gradient_at(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                          const PenaltyParams &p, const PointEval &at);

/// Value and gradient sharing one residual evaluation.
ObjectiveEval objective_with_gradient(const MeasurementEnsemble &ens,
                                      const BlockFactorPair &z,
                                      const ObservationVector &y,
                                      const PenaltyParams &p);

/// Reference scales for the neighborhood sets.
struct NeighborhoodReference {
  std::vector<double> d_n0;
  double mu = 1.0;
  double nu = 1.0;
};

/// Membership in the norm, spectral-incoherence, coded-incoherence and
/// proximity neighborhoods. Each flag requires every component to satisfy
/// the bound.
struct NeighborhoodFlags {
  bool norm = false; ///< ||h_n||, ||x_n|| <= 2 sqrt(d_n0)
  bool mu = false;   ///< sqrt(L) ||F_M h_n||_inf <= 4 mu sqrt(d_n0)
  bool nu = false;   ///< sqrt(Q) ||C_n x_n||_inf <= 4 nu sqrt(d_n0)
  bool eps = false;  ///< ||h_n x_n^* - h_n0 x_n0^*||_F <= eps d_n0
};

/// Reference scales taken from `truth` (d_n0 = ||h_n0|| ||x_n0||, mu and nu
/// from its coherences). `shrink` tests membership in shrink * N for the first
/// three sets, e.g. 1/sqrt(3).
NeighborhoodFlags neighborhood_membership(const MeasurementEnsemble &ens,
                                          const BlockFactorPair &z,
                                          const BlockFactorPair &truth,
                                          double eps, double shrink = 1.0);

NeighborhoodFlags neighborhood_membership(const MeasurementEnsemble &ens,
                                          const BlockFactorPair &z,
                                          const BlockFactorPair &truth,
                                          double eps,
                                          const NeighborhoodReference &ref,
                                          double shrink = 1.0);

} // namespace bdd
