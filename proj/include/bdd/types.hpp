#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace bdd {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Problem geometry.
///
/// L is the number of observed Fourier samples, Q the modulation length, M the
/// number of channel taps, K the message subspace dimension and N the number
/// of superimposed components. Valid when K <= Q <= L, M <= L and all are >= 1.
struct Dimensions {
  int L = 0;
  int Q = 0;
  int M = 0;
  int K = 0;
  int N = 0;

  /// Throws InvalidArgument when the ordering constraints are violated.
  void validate() const;

  friend bool operator==(const Dimensions &, const Dimensions &) = default;
};

/// Known measurement geometry: per-component Rademacher signs r_n and real
/// orthonormal coding matrices C_n (Q x K). Immutable after construction.
class MeasurementEnsemble {
public:
  MeasurementEnsemble(Dimensions dims, std::vector<RVector> modulation,
                      std::vector<RMatrix> coding);

  const Dimensions &dims() const { return dims_; }
  const RVector &modulation(int n) const { return modulation_.at(check(n)); }
  const RMatrix &coding(int n) const { return coding_.at(check(n)); }

  /// diag(r_n) * C_n, the modulated coding matrix.
  const RMatrix &modulated_coding(int n) const {
    return modulated_.at(check(n));
  }

private:
  std::size_t check(int n) const;

  Dimensions dims_;
  std::vector<RVector> modulation_;
  std::vector<RMatrix> coding_;
  std::vector<RMatrix> modulated_;
};

/// Factored unknowns: channel h_n (length M) and coefficients x_n (length K)
/// for every component. The lifted block of component n is h_n x_n^*.
struct BlockFactorPair {
  std::vector<CVector> channels;
  std::vector<CVector> coefficients;

  static BlockFactorPair zeros(const Dimensions &dims);

  int components() const { return static_cast<int>(channels.size()); }

  /// Throws InvalidArgument on a shape mismatch or non-finite entry.
  void validate(const Dimensions &dims) const;

  BlockFactorPair &operator+=(const BlockFactorPair &other);
  BlockFactorPair &operator-=(const BlockFactorPair &other);
  BlockFactorPair &operator*=(cplx alpha);
};

BlockFactorPair operator+(BlockFactorPair a, const BlockFactorPair &b);
BlockFactorPair operator-(BlockFactorPair a, const BlockFactorPair &b);
BlockFactorPair operator*(cplx alpha, BlockFactorPair a);

/// Re <a, b> summed over every block.
double real_inner(const BlockFactorPair &a, const BlockFactorPair &b);
double squared_norm(const BlockFactorPair &z);

/// a * v for real a and complex v, without forming a complex copy of a.
CVector real_times(const RMatrix &a, const CVector &v);
/// a^T * v for real a and complex v.
CVector real_transpose_times(const RMatrix &a, const CVector &v);
bool all_finite(const BlockFactorPair &z);

/// ||h x^* - h0 x0^*||_F^2 without forming M x K matrices.
double lifted_distance_squared(const CVector &h, const CVector &x,
                               const CVector &h0, const CVector &x0);

/// Observed Fourier samples and, in simulation, the noise realization.
struct ObservationVector {
  CVector samples;
  std::optional<CVector> noise;

  void validate(const Dimensions &dims) const;
  double noise_energy() const {
    return noise ? noise->squaredNorm() : 0.0;
  }
};

} // namespace bdd
