#include "bdd/spectral_ops.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bdd/errors.hpp"
#include "bdd/fft.hpp"

namespace bdd {

namespace {

void require_component(const MeasurementEnsemble &ens, int n) {
  if (n < 0 || n >= ens.dims().N)
    throw InvalidArgument("component index " + std::to_string(n) +
                          " out of range");
}

CVector padded_fft(const CVector &v, int L) {
  CVector buf = CVector::Zero(L);
  buf.head(v.size()) = v;
  fft::forward(buf);
  return buf;
}

// sum over anti-diagonals (m + q) mod L of an M x Q array
CVector wrap_antidiagonals(const CMatrix &p, int L) {
  CVector out = CVector::Zero(L);
  for (Eigen::Index q = 0; q < p.cols(); ++q)
    for (Eigen::Index m = 0; m < p.rows(); ++m)
      out[(m + q) % L] += p(m, q);
  return out;
}

} // namespace

CVector partial_dft_apply(int L, const CVector &v) {
  if (L < 1 || v.size() > L)
    throw InvalidArgument("partial DFT input longer than L");
  CVector out = padded_fft(v, L);
  out /= std::sqrt(static_cast<double>(L));
  return out;
}

CVector partial_dft_adjoint(int L, const CVector &w, int W) {
  if (L < 1 || w.size() != L)
    throw InvalidArgument("partial DFT adjoint expects a length-L input");
  if (W < 0 || W > L)
    throw InvalidArgument("partial DFT adjoint width must satisfy 0 <= W <= L");
  CVector buf = w;
  fft::backward(buf);
  return buf.head(W) / std::sqrt(static_cast<double>(L));
}

CVector forward_component(const MeasurementEnsemble &ens, int n,
                          const CVector &h, const CVector &x) {
  require_component(ens, n);
  const Dimensions &d = ens.dims();
  if (h.size() != d.M || x.size() != d.K)
    throw InvalidArgument("forward_component: factor lengths must be M and K");
  const CVector s = real_times(ens.modulated_coding(n), x.conjugate());
  CVector out = padded_fft(s, d.L);
  out.array() *= padded_fft(h, d.L).array();
  out /= std::sqrt(static_cast<double>(d.L));
  return out;
}

CVector forward_lifted(const MeasurementEnsemble &ens, int n, const CMatrix &z) {
  require_component(ens, n);
  const Dimensions &d = ens.dims();
  if (z.rows() != d.M || z.cols() != d.K)
    throw InvalidArgument("forward_lifted: block must be M x K");
  // A_n(Z)[l] = L^{-1/2} sum_{m,q} e^{-2 pi i l (m+q)/L} (Z (R C)^T)[m, q]
  const RMatrix &rc = ens.modulated_coding(n);
  CMatrix p(d.M, d.Q);
  p.real() = z.real() * rc.transpose();
  p.imag() = z.imag() * rc.transpose();
  CVector out = wrap_antidiagonals(p, d.L);
  fft::forward(out);
  out /= std::sqrt(static_cast<double>(d.L));
  return out;
}

CVector forward_map(const MeasurementEnsemble &ens, const BlockFactorPair &z) {
  z.validate(ens.dims());
  CVector out = CVector::Zero(ens.dims().L);
  for (int n = 0; n < ens.dims().N; ++n)
    out += forward_component(ens, n, z.channels[n], z.coefficients[n]);
  return out;
}

CVector forward_map_lifted(const MeasurementEnsemble &ens,
                           const std::vector<CMatrix> &blocks) {
  if (blocks.size() != static_cast<std::size_t>(ens.dims().N))
    throw InvalidArgument("forward_map_lifted: need one block per component");
  CVector out = CVector::Zero(ens.dims().L);
  for (int n = 0; n < ens.dims().N; ++n)
    out += forward_lifted(ens, n, blocks[n]);
  return out;
}

namespace {

CVector adjoint_kernel(int L, const CVector &w) {
  CVector g = w;
  fft::backward(g);
  g /= static_cast<double>(L);
  return g;
}

void require_samples(const MeasurementEnsemble &ens, const CVector &w) {
  if (w.size() != ens.dims().L)
    throw InvalidArgument("adjoint: input must have length L");
}

} // namespace

std::pair<CVector, CVector> adjoint_products(const MeasurementEnsemble &ens,
                                             int n, const CVector &w,
                                             const CVector &h, const CVector &x) {
  require_component(ens, n);
  require_samples(ens, w);
  const Dimensions &d = ens.dims();
  if (h.size() != d.M || x.size() != d.K)
    throw InvalidArgument("adjoint_products: factor lengths must be M and K");
  const CVector g = adjoint_kernel(d.L, w);
  const RMatrix &rc = ens.modulated_coding(n);
  const CVector s = real_times(rc, x);
  const double scale = std::sqrt(static_cast<double>(d.L));
  // Hankel products: (G s)[m] and (G^* h)[q] with G[m, q] = g[(m + q) mod L]
  CVector ext(d.M + d.Q);
  for (int i = 0; i < d.M + d.Q; ++i)
    ext[i] = g[i % d.L];
  CVector gs = CVector::Zero(d.M);
  CVector gh(d.Q);
  for (int q = 0; q < d.Q; ++q) {
    const auto seg = ext.segment(q, d.M);
    gs += s[q] * seg;
    gh[q] = seg.dot(h);
  }
  return {gs * scale, real_transpose_times(rc, gh) * scale};
}

CMatrix adjoint_component(const MeasurementEnsemble &ens, int n,
                          const CVector &w) {
  require_component(ens, n);
  const Dimensions &d = ens.dims();
  if (w.size() != d.L)
    throw InvalidArgument("adjoint_component: input must have length L");
  // A_n^*(w)[m, k] = sqrt(L) sum_q (R C)[q, k] g[(m + q) mod L],
  // g = unitary-normalized inverse transform of w scaled by 1/sqrt(L).
  const CVector g = adjoint_kernel(d.L, w);
  CMatrix hankel(d.M, d.Q);
  for (int q = 0; q < d.Q; ++q)
    for (int m = 0; m < d.M; ++m)
      hankel(m, q) = g[(m + q) % d.L];
  const RMatrix &rc = ens.modulated_coding(n);
  CMatrix out(d.M, d.K);
  out.real() = hankel.real() * rc;
  out.imag() = hankel.imag() * rc;
  out *= std::sqrt(static_cast<double>(d.L));
  return out;
}

std::vector<CMatrix> adjoint_map(const MeasurementEnsemble &ens,
                                 const CVector &w) {
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(ens.dims().N));
  for (int n = 0; n < ens.dims().N; ++n)
    out.push_back(adjoint_component(ens, n, w));
  return out;
}

CMatrix dense_oracle(const MeasurementEnsemble &ens, int n) {
  require_component(ens, n);
  const Dimensions &d = ens.dims();
  if (static_cast<long>(d.M) * d.K > 4096)
    throw InvalidArgument("dense_oracle refused: M*K exceeds 4096");
  CMatrix out(d.L, d.M * d.K);
  for (int k = 0; k < d.K; ++k)
    for (int m = 0; m < d.M; ++m)
      out.col(m + d.M * k) = forward_component(
          ens, n, CVector::Unit(d.M, m), CVector::Unit(d.K, k));
  return out;
}

namespace {

double frob_norm(const std::vector<CMatrix> &blocks) {
  double acc = 0.0;
  for (const auto &b : blocks)
    acc += b.squaredNorm();
  return std::sqrt(acc);
}

std::vector<CMatrix> random_blocks(int count, int rows, int cols) {
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss;
  std::vector<CMatrix> out(static_cast<std::size_t>(count), CMatrix(rows, cols));
  for (auto &b : out)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < b.rows(); ++i)
        b(i, j) = cplx(gauss(rng), gauss(rng));
  return out;
}

// Power iteration on the normal operator of a block-linear map.
template <typename Forward, typename Adjoint>
NormEstimate power_norm(std::vector<CMatrix> blocks, Forward fwd, Adjoint adj,
                        int max_iters, double tol) {
  NormEstimate est;
  double nrm = frob_norm(blocks);
  for (auto &b : blocks)
    b /= nrm;
  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    std::vector<CMatrix> next = adj(fwd(blocks));
    const double lambda = frob_norm(next);
    est.iterations = it;
    if (lambda == 0.0) {
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    for (auto &b : next)
      b /= lambda;
    blocks = std::move(next);
    est.value = std::sqrt(lambda);
    if (std::abs(lambda - prev) <= tol * lambda) {
      est.converged = true;
      break;
    }
    prev = lambda;
  }
  return est;
}

} // namespace

NormEstimate component_operator_norm(const MeasurementEnsemble &ens, int n,
                                     int max_iters, double tol) {
  require_component(ens, n);
  const Dimensions &d = ens.dims();
  return power_norm(
      random_blocks(1, d.M, d.K),
      [&](const std::vector<CMatrix> &b) { return forward_lifted(ens, n, b[0]); },
      [&](const CVector &w) {
        return std::vector<CMatrix>{adjoint_component(ens, n, w)};
      },
      max_iters, tol);
}

NormEstimate operator_norm(const MeasurementEnsemble &ens, int max_iters,
                           double tol) {
  const Dimensions &d = ens.dims();
  return power_norm(
      random_blocks(d.N, d.M, d.K),
      [&](const std::vector<CMatrix> &b) { return forward_map_lifted(ens, b); },
      [&](const CVector &w) { return adjoint_map(ens, w); }, max_iters, tol);
}

} // namespace bdd
