#include "bdd/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdd/errors.hpp"

namespace bdd {

void Dimensions::validate() const {
  if (L < 1 || Q < 1 || M < 1 || K < 1 || N < 1)
    throw InvalidArgument("all dimensions must be positive (L=" +
                          std::to_string(L) + ", Q=" + std::to_string(Q) +
                          ", M=" + std::to_string(M) + ", K=" +
                          std::to_string(K) + ", N=" + std::to_string(N) + ")");
  if (K > Q)
    throw InvalidArgument("K must not exceed Q");
  if (Q > L)
    throw InvalidArgument("Q must not exceed L");
  if (M > L)
    throw InvalidArgument("M must not exceed L");
}

MeasurementEnsemble::MeasurementEnsemble(Dimensions dims,
                                         std::vector<RVector> modulation,
                                         std::vector<RMatrix> coding)
    : dims_(dims), modulation_(std::move(modulation)),
      coding_(std::move(coding)) {
  dims_.validate();
  const auto n_comp = static_cast<std::size_t>(dims_.N);
  if (modulation_.size() != n_comp || coding_.size() != n_comp)
    throw InvalidArgument("ensemble needs exactly N modulation and coding entries");

  modulated_.reserve(n_comp);
  for (std::size_t n = 0; n < n_comp; ++n) {
    const RVector &r = modulation_[n];
    const RMatrix &c = coding_[n];
    if (r.size() != dims_.Q)
      throw InvalidArgument("modulation sequence must have length Q");
    for (Eigen::Index q = 0; q < r.size(); ++q)
      if (r[q] != 1.0 && r[q] != -1.0)
        throw InvalidArgument("modulation entries must be exactly +1 or -1");
    if (c.rows() != dims_.Q || c.cols() != dims_.K)
      throw InvalidArgument("coding matrix must be Q x K");
    const double defect =
        (c.transpose() * c - RMatrix::Identity(dims_.K, dims_.K)).norm();
    if (!(defect <= 1e-12))
      throw InvalidArgument("coding matrix columns are not orthonormal (defect " +
                            std::to_string(defect) + ")");
    modulated_.push_back(r.asDiagonal() * c);
  }
}

std::size_t MeasurementEnsemble::check(int n) const {
  if (n < 0 || n >= dims_.N)
    throw InvalidArgument("component index " + std::to_string(n) +
                          " out of range");
  return static_cast<std::size_t>(n);
}

BlockFactorPair BlockFactorPair::zeros(const Dimensions &dims) {
  BlockFactorPair z;
  z.channels.assign(static_cast<std::size_t>(dims.N), CVector::Zero(dims.M));
  z.coefficients.assign(static_cast<std::size_t>(dims.N), CVector::Zero(dims.K));
  return z;
}

void BlockFactorPair::validate(const Dimensions &dims) const {
  if (channels.size() != static_cast<std::size_t>(dims.N) ||
      coefficients.size() != static_cast<std::size_t>(dims.N))
    throw InvalidArgument("factor pair must hold N channels and N coefficient vectors");
  for (std::size_t n = 0; n < channels.size(); ++n) {
    if (channels[n].size() != dims.M)
      throw InvalidArgument("channel length must equal M");
    if (coefficients[n].size() != dims.K)
      throw InvalidArgument("coefficient length must equal K");
  }
  if (!all_finite(*this))
    throw InvalidArgument("factor pair holds non-finite entries");
}

namespace {

void require_same_shape(const BlockFactorPair &a, const BlockFactorPair &b) {
  if (a.channels.size() != b.channels.size() ||
      a.coefficients.size() != b.coefficients.size())
    throw InvalidArgument("factor pairs differ in component count");
  for (std::size_t n = 0; n < a.channels.size(); ++n)
    if (a.channels[n].size() != b.channels[n].size() ||
        a.coefficients[n].size() != b.coefficients[n].size())
      throw InvalidArgument("factor pairs differ in block length");
}

} // namespace

BlockFactorPair &BlockFactorPair::operator+=(const BlockFactorPair &other) {
  require_same_shape(*this, other);
  for (std::size_t n = 0; n < channels.size(); ++n) {
    channels[n] += other.channels[n];
    coefficients[n] += other.coefficients[n];
  }
  return *this;
}

BlockFactorPair &BlockFactorPair::operator-=(const BlockFactorPair &other) {
  require_same_shape(*this, other);
  for (std::size_t n = 0; n < channels.size(); ++n) {
    channels[n] -= other.channels[n];
    coefficients[n] -= other.coefficients[n];
  }
  return *this;
}

BlockFactorPair &BlockFactorPair::operator*=(cplx alpha) {
  for (auto &h : channels)
    h *= alpha;
  for (auto &x : coefficients)
    x *= alpha;
  return *this;
}

BlockFactorPair operator+(BlockFactorPair a, const BlockFactorPair &b) {
  a += b;
  return a;
}

BlockFactorPair operator-(BlockFactorPair a, const BlockFactorPair &b) {
  a -= b;
  return a;
}

BlockFactorPair operator*(cplx alpha, BlockFactorPair a) {
  a *= alpha;
  return a;
}

double real_inner(const BlockFactorPair &a, const BlockFactorPair &b) {
  require_same_shape(a, b);
  double acc = 0.0;
  for (std::size_t n = 0; n < a.channels.size(); ++n) {
    acc += a.channels[n].dot(b.channels[n]).real();
    acc += a.coefficients[n].dot(b.coefficients[n]).real();
  }
  return acc;
}

CVector real_times(const RMatrix &a, const CVector &v) {
  CVector out(a.rows());
  out.real() = a * v.real();
  out.imag() = a * v.imag();
  return out;
}

CVector real_transpose_times(const RMatrix &a, const CVector &v) {
  CVector out(a.cols());
  out.real() = a.transpose() * v.real();
  out.imag() = a.transpose() * v.imag();
  return out;
}

double squared_norm(const BlockFactorPair &z) {
  double acc = 0.0;
  for (const auto &h : z.channels)
    acc += h.squaredNorm();
  for (const auto &x : z.coefficients)
    acc += x.squaredNorm();
  return acc;
}

bool all_finite(const BlockFactorPair &z) {
  for (const auto &h : z.channels)
    if (!h.allFinite())
      return false;
  for (const auto &x : z.coefficients)
    if (!x.allFinite())
      return false;
  return true;
}

double lifted_distance_squared(const CVector &h, const CVector &x,
                               const CVector &h0, const CVector &x0) {
  // h x^* - h0 x0^* = U V^* with U = [h, h0], V = [x, -x0]. With thin QR
  // factors U = Qu Ru, V = Qv Rv the norm is ||Ru Rv^*||_F; the cancellation
  // happens entrywise in a 2 x 2 product rather than in squared norms.
  CMatrix u(h.size(), 2);
  u << h, h0;
  CMatrix v(x.size(), 2);
  v << x, -x0;
  const Eigen::Index ru_rows = std::min<Eigen::Index>(u.rows(), 2);
  const Eigen::Index rv_rows = std::min<Eigen::Index>(v.rows(), 2);
  const CMatrix ru = Eigen::HouseholderQR<CMatrix>(u)
                         .matrixQR()
                         .topRows(ru_rows)
                         .triangularView<Eigen::Upper>();
  const CMatrix rv = Eigen::HouseholderQR<CMatrix>(v)
                         .matrixQR()
                         .topRows(rv_rows)
                         .triangularView<Eigen::Upper>();
  return (ru * rv.adjoint()).squaredNorm();
}

void ObservationVector::validate(const Dimensions &dims) const {
  if (samples.size() != dims.L)
    throw InvalidArgument("observation length must equal L");
  if (noise && noise->size() != dims.L)
    throw InvalidArgument("noise length must equal L");
}

} // namespace bdd
