#pragma once

#include <utility>
#include <vector>

#include "bdd/types.hpp"

// Partial-DFT plumbing and the lifted measurement maps.
//
// F_W denotes the first W columns of the unitary L-point DFT matrix
// F[l, m] = exp(-2 pi i l m / L) / sqrt(L). The component map acts on the
// lifted block Z_n = h_n x_n^* as
//
//   A_n(h x^*) = sqrt(L) * F_Q(r_n .* C_n conj(x)) .* F_M h,
//
// which is linear in Z_n; for real coefficients it is the plain modulated
// circular convolution of C_n x with h. Column (m, k) of a lifted block is
// flattened column-major, index m + M * k, wherever a vectorization is needed.
namespace bdd {

/// F_W v for a length-W input, W <= L. Zero-pad, L-point FFT, scale 1/sqrt(L).
CVector partial_dft_apply(int L, const CVector &v);

/// F_W^* w for a length-L input; the first W entries of the unitary inverse.
CVector partial_dft_adjoint(int L, const CVector &w, int W);

/// A_n(h x^*), a length-L spectrum.
CVector forward_component(const MeasurementEnsemble &ens, int n,
                          const CVector &h, const CVector &x);

/// A_n(Z) for an arbitrary M x K block.
CVector forward_lifted(const MeasurementEnsemble &ens, int n, const CMatrix &z);

/// A(Z) = sum_n A_n(h_n x_n^*).
CVector forward_map(const MeasurementEnsemble &ens, const BlockFactorPair &z);

/// A(Z) for arbitrary blocks, one M x K matrix per component.
CVector forward_map_lifted(const MeasurementEnsemble &ens,
                           const std::vector<CMatrix> &blocks);

/// A_n^*(w) = sum_l w[l] f_l c_{nl}^*, the M x K Frobenius adjoint of A_n.
CMatrix adjoint_component(const MeasurementEnsemble &ens, int n,
                          const CVector &w);

/// (A_n^*(w) x, A_n^*(w)^* h) without forming the M x K matrix.
std::pair<CVector, CVector> adjoint_products(const MeasurementEnsemble &ens,
                                             int n, const CVector &w,
                                             const CVector &h, const CVector &x);

/// Blockwise adjoint of A.
std::vector<CMatrix> adjoint_map(const MeasurementEnsemble &ens,
                                 const CVector &w);

/// Explicit L x (M K) matrix of A_n; test oracle. Refuses M K > 4096.
CMatrix dense_oracle(const MeasurementEnsemble &ens, int n);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// ||A_n||_{2->2} by power iteration on A_n^* A_n.
NormEstimate component_operator_norm(const MeasurementEnsemble &ens, int n,
                                     int max_iters = 1000, double tol = 1e-12);

/// ||A||_{2->2} of the summed map by power iteration on A^* A.
NormEstimate operator_norm(const MeasurementEnsemble &ens, int max_iters = 1000,
                           double tol = 1e-12);

} // namespace bdd
