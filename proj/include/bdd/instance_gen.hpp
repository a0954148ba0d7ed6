#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bdd/types.hpp"

namespace bdd {

/// Everything needed to regenerate one synthetic instance bit-for-bit.
struct TrialSpec {
  Dimensions dims;
  std::uint64_t seed = 0;
  std::optional<double> snr_db; ///< unset: noiseless
  /// Per-component energies d_n0. Empty: geometric ladder skew^n (all ones
  /// for the default skew of 1).
  std::vector<double> target_d;
  double skew = 1.0;
  bool real_valued = false;

  std::vector<double> component_targets() const;
};

/// Independent 64-bit seed for stream (tag, index) of a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                          std::uint64_t index = 0);

/// Q x K orthonormal DCT-II column subset for component n of N.
///
/// Component n takes DCT columns n, n + N, n + 2N, ... below Q; if fewer than
/// K exist, the remaining unused columns are appended in ascending order.
RMatrix make_coding_matrix(int Q, int K, int n, int N);

/// iid uniform +-1 sequence; stream determined by (seed, n).
RVector make_modulation(int Q, int n, std::uint64_t seed);

/// Complex (or real) Gaussian factors rescaled to ||h_n||^2 = ||x_n||^2 = d_n0.
BlockFactorPair make_ground_truth(const TrialSpec &spec);

struct Instance {
  MeasurementEnsemble ensemble;
  BlockFactorPair truth;
  ObservationVector observation;
};

/// Ensemble, truth and y = A(Z0) + e with ||e||^2 set so that
/// 10 log10(||A(Z0)||^2 / ||e||^2) equals snr_db exactly.
Instance synthesize(const TrialSpec &spec);

/// sqrt(sum_n ||h_n x_n^* - h_n0 x_n0^*||_F^2 / sum_n ||h_n0 x_n0^*||_F^2).
/// Throws DegenerateInput for a zero truth.
double relative_error(const BlockFactorPair &est, const BlockFactorPair &truth);

} // namespace bdd
