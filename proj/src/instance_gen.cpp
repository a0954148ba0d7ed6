#include "bdd/instance_gen.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "bdd/errors.hpp"
#include "bdd/spectral_ops.hpp"

namespace bdd {

namespace {

enum StreamTag : std::uint64_t {
  kModulationStream = 1,
  kTruthStream = 2,
  kNoiseStream = 3,
};

std::mt19937_64 stream(std::uint64_t base, std::uint64_t tag,
                       std::uint64_t index) {
  return std::mt19937_64(derive_seed(base, tag, index));
}

CVector gaussian_vector(std::mt19937_64 &rng, int len, bool real_valued) {
  std::normal_distribution<double> gauss;
  CVector v(len);
  for (int i = 0; i < len; ++i) {
    const double re = gauss(rng);
    const double im = real_valued ? 0.0 : gauss(rng);
    v[i] = cplx(re, im);
  }
  return v;
}

} // namespace

std::vector<double> TrialSpec::component_targets() const {
  if (!target_d.empty()) {
    if (target_d.size() != static_cast<std::size_t>(dims.N))
      throw InvalidArgument("need one target energy per component");
    for (double t : target_d)
      if (!(t > 0.0))
        throw InvalidArgument("target energies must be positive");
    return target_d;
  }
  if (!(skew > 0.0))
    throw InvalidArgument("skew must be positive");
  std::vector<double> out(static_cast<std::size_t>(dims.N));
  for (int n = 0; n < dims.N; ++n)
    out[static_cast<std::size_t>(n)] = std::pow(skew, n);
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                          std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base),
                    static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

RMatrix make_coding_matrix(int Q, int K, int n, int N) {
  if (Q < 1 || K < 1 || K > Q)
    throw InvalidArgument("coding matrix needs 1 <= K <= Q");
  if (N < 1 || n < 0 || n >= N)
    throw InvalidArgument("coding matrix component index out of range");

  std::vector<int> columns;
  std::vector<bool> taken(static_cast<std::size_t>(Q), false);
  for (int j = n; j < Q && static_cast<int>(columns.size()) < K; j += N) {
    columns.push_back(j);
    taken[static_cast<std::size_t>(j)] = true;
  }
  for (int j = 0; j < Q && static_cast<int>(columns.size()) < K; ++j)
    if (!taken[static_cast<std::size_t>(j)])
      columns.push_back(j);

  RMatrix c(Q, K);
  const double base = std::sqrt(2.0 / Q);
  for (int k = 0; k < K; ++k) {
    const int j = columns[static_cast<std::size_t>(k)];
    const double weight = j == 0 ? std::sqrt(1.0 / Q) : base;
    for (int q = 0; q < Q; ++q)
      c(q, k) = weight * std::cos(std::numbers::pi * (2.0 * q + 1.0) * j / (2.0 * Q));
  }
  return c;
}

RVector make_modulation(int Q, int n, std::uint64_t seed) {
  if (Q < 1)
    throw InvalidArgument("modulation length must be positive");
  auto rng = stream(seed, kModulationStream, static_cast<std::uint64_t>(n));
  std::bernoulli_distribution coin(0.5);
  RVector r(Q);
  for (int q = 0; q < Q; ++q)
    r[q] = coin(rng) ? 1.0 : -1.0;
  return r;
}

BlockFactorPair make_ground_truth(const TrialSpec &spec) {
  spec.dims.validate();
  const std::vector<double> targets = spec.component_targets();
  BlockFactorPair z;
  for (int n = 0; n < spec.dims.N; ++n) {
    auto rng = stream(spec.seed, kTruthStream, static_cast<std::uint64_t>(n));
    CVector h = gaussian_vector(rng, spec.dims.M, spec.real_valued);
    CVector x = gaussian_vector(rng, spec.dims.K, spec.real_valued);
    const double root = std::sqrt(targets[static_cast<std::size_t>(n)]);
    h *= root / h.norm();
    x *= root / x.norm();
    z.channels.push_back(std::move(h));
    z.coefficients.push_back(std::move(x));
  }
  return z;
}

Instance synthesize(const TrialSpec &spec) {
  const Dimensions &d = spec.dims;
  d.validate();
  std::vector<RVector> modulation;
  std::vector<RMatrix> coding;
  for (int n = 0; n < d.N; ++n) {
    modulation.push_back(make_modulation(d.Q, n, spec.seed));
    coding.push_back(make_coding_matrix(d.Q, d.K, n, d.N));
  }
  MeasurementEnsemble ens(d, std::move(modulation), std::move(coding));
  BlockFactorPair truth = make_ground_truth(spec);
  ObservationVector obs;
  obs.samples = forward_map(ens, truth);
  if (spec.snr_db) {
    if (!std::isfinite(*spec.snr_db))
      throw InvalidArgument("snr_db must be finite; leave it unset for noiseless");
    auto rng = stream(spec.seed, kNoiseStream, 0);
    CVector e = gaussian_vector(rng, d.L, false);
    const double target =
        obs.samples.squaredNorm() * std::pow(10.0, -*spec.snr_db / 10.0);
    e *= std::sqrt(target / e.squaredNorm());
    obs.samples += e;
    obs.noise = std::move(e);
  }
  return Instance{std::move(ens), std::move(truth), std::move(obs)};
}

double relative_error(const BlockFactorPair &est, const BlockFactorPair &truth) {
  if (est.components() != truth.components())
    throw InvalidArgument("relative_error: component counts differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < truth.channels.size(); ++n) {
    if (est.channels[n].size() != truth.channels[n].size() ||
        est.coefficients[n].size() != truth.coefficients[n].size())
      throw InvalidArgument("relative_error: block lengths differ");
    num += lifted_distance_squared(est.channels[n], est.coefficients[n],
                                   truth.channels[n], truth.coefficients[n]);
    den += truth.channels[n].squaredNorm() * truth.coefficients[n].squaredNorm();
  }
  if (den == 0.0)
    throw DegenerateInput("relative_error: truth is zero");
  return std::sqrt(num / den);
}

} // namespace bdd
