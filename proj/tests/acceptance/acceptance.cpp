// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bdd/harness.hpp"
#include "bdd/instance_gen.hpp"
#include "bdd/objective.hpp"
#include "bdd/solver.hpp"
#include "bdd/spectral_ops.hpp"
#include "oracles.hpp"

using namespace bdd;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds; ///< <= 0: no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char *f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double mismatch(cplx a, cplx b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int worker_count() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

TrialOptions oracle_options() {
  TrialOptions o;
  o.coherence = CoherenceMode::Oracle;
  return o;
}

CoherenceBounds oracle_bounds(const Instance &inst) {
  const CoherenceReport rep = coherences(inst.ensemble, inst.truth);
  return {std::sqrt(rep.mu_sq), std::sqrt(rep.nu_sq)};
}

Dimensions random_dims(std::mt19937_64 &rng, int max_l, int max_mk) {
  for (;;) {
    const int L = 2 + static_cast<int>(rng() % (max_l - 1));
    const int Q = 1 + static_cast<int>(rng() % L);
    const int K = 1 + static_cast<int>(rng() % Q);
    const int M = 1 + static_cast<int>(rng() % L);
    const int N = 1 + static_cast<int>(rng() % 3);
    if (M * K <= max_mk)
      return Dimensions{L, Q, M, K, N};
  }
}

// largest F~ increase over every backtracking run in the suite
double g_max_increase = -std::numeric_limits<double>::infinity();
int g_monitored_runs = 0;

void record_increase(double v, int runs) {
  g_max_increase = std::max(g_max_increase, v);
  g_monitored_runs += runs;
}

const Dimensions kScaled{320, 320, 8, 8, 2};

Outcome adjoint_identity() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Dimensions d = random_dims(rng, 64, 64 * 64);
    const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
    std::vector<CMatrix> z;
    for (int n = 0; n < d.N; ++n)
      z.push_back(oracle::random_block(rng, d.M, d.K));
    const CVector w = oracle::random_complex(rng, d.L);
    const cplx lhs = w.dot(forward_map_lifted(ens, z));
    const std::vector<CMatrix> back = adjoint_map(ens, w);
    cplx rhs(0.0, 0.0);
    for (int n = 0; n < d.N; ++n)
      rhs += (back[n].conjugate().cwiseProduct(z[n])).sum();
    worst = std::max(worst, mismatch(lhs, rhs));
  }
  return {worst <= 1e-10, "max relative mismatch " + fmt("%.3g", worst) + " (tol 1e-10)"};
}

Outcome dense_equivalence() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Dimensions d = random_dims(rng, 64, 256);
    const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
    const CVector w = oracle::random_complex(rng, d.L);
    for (int n = 0; n < d.N; ++n) {
      const CMatrix a = oracle::dense_matrix(ens, n);
      const CMatrix z = oracle::random_block(rng, d.M, d.K);
      const CVector fwd = a * oracle::vec(z);
      worst = std::max(worst, (forward_lifted(ens, n, z) - fwd).norm() / fwd.norm());
      const CVector h = oracle::random_complex(rng, d.M);
      const CVector x = oracle::random_complex(rng, d.K);
      const CVector rank1 = a * oracle::vec(h * x.adjoint());
      worst = std::max(worst, (forward_component(ens, n, h, x) - rank1).norm() / rank1.norm());
      const CMatrix adj = oracle::unvec(a.adjoint() * w, d.M, d.K);
      worst = std::max(worst, (adjoint_component(ens, n, w) - adj).norm() / adj.norm());
      worst = std::max(worst, (dense_oracle(ens, n) - a).norm() / a.norm());
    }
  }
  return {worst <= 1e-10, "max relative difference " + fmt("%.3g", worst) + " (tol 1e-10)"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  int active = 0;
  const double eps = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Dimensions d = random_dims(rng, 48, 256);
    const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
    const BlockFactorPair z = oracle::random_pair(d, rng);
    BlockFactorPair delta = oracle::random_pair(d, rng);
    delta *= cplx(1.0 / std::sqrt(squared_norm(delta)));
    const ObservationVector y{oracle::random_complex(rng, d.L), std::nullopt};
    PenaltyParams p;
    p.rho = 1.0 + static_cast<double>(rng() % 4);
    p.d_n.assign(static_cast<std::size_t>(d.N), 0.5 + 0.1 * static_cast<double>(rng() % 10));
    p.d = std::sqrt(static_cast<double>(d.N)) * p.d_n[0];
    p.mu = 0.5 + 0.1 * static_cast<double>(rng() % 10);
    p.nu = 0.5 + 0.1 * static_cast<double>(rng() % 10);
    if (penalty(ens, z, p) > 0.0)
      ++active;
    const ObjectiveEval ev = objective_with_gradient(ens, z, y, p);
    const double analytic = 2.0 * real_inner(ev.gradient, delta);
    const double numeric = (objective(ens, z + cplx(eps) * delta, y, p).total() -
                            objective(ens, z - cplx(eps) * delta, y, p).total()) /
                           (2.0 * eps);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    worst = std::max(worst, scale > 0.0 ? std::abs(analytic - numeric) / scale : 0.0);
  }
  const bool ok = worst <= 1e-6 && active > 0;
  return {ok, "max relative mismatch " + fmt("%.3g", worst) + " (tol 1e-6), " +
                  std::to_string(active) + "/100 points with active hinges"};
}

Outcome exhaustive_isometry() {
  const Dimensions d{16, 8, 4, 3, 2};
  std::mt19937_64 rng(404);
  std::vector<RMatrix> coding{make_coding_matrix(8, 3, 0, 2), make_coding_matrix(8, 3, 1, 2)};
  const BlockFactorPair truth = oracle::random_pair(d, rng);
  const BlockFactorPair other = truth + cplx(0.3) * oracle::random_pair(d, rng);
  std::vector<CMatrix> w;
  double fro = 0.0;
  for (int n = 0; n < 2; ++n) {
    w.push_back(other.channels[n] * other.coefficients[n].adjoint() -
                truth.channels[n] * truth.coefficients[n].adjoint());
    fro += w.back().squaredNorm();
  }
  const int patterns = 1 << 16;
  double sum = 0.0;
  for (int mask = 0; mask < patterns; ++mask) {
    std::vector<RVector> signs(2, RVector(8));
    for (int n = 0; n < 2; ++n)
      for (int q = 0; q < 8; ++q)
        signs[n][q] = (mask >> (8 * n + q)) & 1 ? -1.0 : 1.0;
    sum += forward_map_lifted(MeasurementEnsemble(d, signs, coding), w).squaredNorm();
  }
  const double ratio = sum / patterns / fro;
  return {std::abs(ratio - 1.0) <= 1e-8,
          "mean ratio " + fmt("%.15f", ratio) + " over 65536 patterns (tol 1e-8)"};
}

Outcome scaled_recovery() {
  const TrialOptions opts = oracle_options();
  const auto records = parallel_map<TrialRecord>(10, worker_count(), [&](int t) {
    return run_trial(TrialSpec{kScaled, trial_seed(1, kScaled, t)}, opts);
  });
  int ok = 0;
  int max_iters = 0;
  double worst_inc = -std::numeric_limits<double>::infinity();
  for (const TrialRecord &r : records) {
    ok += r.success && r.iterations <= 5000 ? 1 : 0;
    max_iters = std::max(max_iters, r.iterations);
    worst_inc = std::max(worst_inc, r.max_increase);
  }
  record_increase(worst_inc, 10);
  return {ok >= 9, std::to_string(ok) + "/10 seeds below 1e-2 (need 9), max iterations " +
                       std::to_string(max_iters)};
}

Outcome q_monotone() {
  const std::vector<CellSummary> cells =
      run_phase_transition(desk_phase_grid(), oracle_options(), worker_count(), std::nullopt);
  double worst_inc = -std::numeric_limits<double>::infinity();
  for (const CellSummary &c : cells)
    worst_inc = std::max(worst_inc, c.max_increase);
  record_increase(worst_inc, static_cast<int>(cells.size()) * desk_phase_grid().trials);
  const MonotonicitySummary s = q_monotonicity(cells);
  return {s.fraction() >= 0.9, std::to_string(s.monotone) + "/" + std::to_string(s.pairs) +
                                   " (K, M) pairs non-decreasing in Q, fraction " +
                                   fmt("%.3f", s.fraction()) + " (need 0.9)"};
}

Outcome snr_trend() {
  const std::vector<double> snrs{10, 20, 30, 40, 50};
  const auto pts =
      run_snr_sweep(kScaled, snrs, false, 10, 1, oracle_options(), worker_count(), std::nullopt);
  bool decreasing = true;
  std::string series;
  double worst_inc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && !(pts[i].mean_rel_err < pts[i - 1].mean_rel_err))
      decreasing = false;
    series += (i ? " " : "") + fmt("%.3g", pts[i].mean_rel_err);
    worst_inc = std::max(worst_inc, pts[i].max_increase);
  }
  record_increase(worst_inc, 50);
  const double ratio = pts[1].mean_rel_err / pts[3].mean_rel_err;
  const bool in_band = ratio >= 10.0 / 3.0 && ratio <= 30.0;
  return {decreasing && in_band, "errors [" + series + "], strictly decreasing " +
                                     (decreasing ? "yes" : "no") + ", 20/40 dB ratio " +
                                     fmt("%.2f", ratio) + " (band [3.33, 30])"};
}

Outcome monotone_loss() {
  const bool ok = g_monitored_runs > 0 && g_max_increase <= 1e-12;
  return {ok, "largest recorded F~ increase " + fmt("%.3g", g_max_increase) + " over " +
                  std::to_string(g_monitored_runs) + " backtracking runs (tol 1e-12)"};
}

Outcome init_quality() {
  std::vector<double> init_err;
  std::vector<double> random_err;
  double worst_violation = -std::numeric_limits<double>::infinity();
  const CMatrix fm = oracle::dft_slice(kScaled.L, kScaled.M);
  const SolverConfig cfg;
  for (int t = 0; t < 20; ++t) {
    const TrialSpec spec{kScaled, trial_seed(2, kScaled, t)};
    const Instance inst = synthesize(spec);
    const CoherenceBounds b = oracle_bounds(inst);
    const InitResult init = initialize(inst.ensemble, inst.observation, b, cfg);
    init_err.push_back(relative_error(init.start, inst.truth));

    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    BlockFactorPair rnd;
    for (int n = 0; n < kScaled.N; ++n) {
      rnd.channels.push_back(oracle::random_complex(rng, kScaled.M).normalized());
      rnd.coefficients.push_back(oracle::random_complex(rng, kScaled.K).normalized());
    }
    random_err.push_back(relative_error(rnd, inst.truth));

    for (int n = 0; n < kScaled.N; ++n) {
      const double root = std::sqrt(init.d_n[static_cast<std::size_t>(n)]);
      const double spec_peak = std::sqrt(static_cast<double>(kScaled.L)) *
                               (fm * init.start.channels[n]).cwiseAbs().maxCoeff();
      const double code_peak =
          std::sqrt(static_cast<double>(kScaled.Q)) *
          (inst.ensemble.coding(n).cast<cplx>() * init.start.coefficients[n]).cwiseAbs().maxCoeff();
      worst_violation = std::max(worst_violation, spec_peak - 2.0 * root * b.mu);
      worst_violation = std::max(worst_violation, code_peak - 2.0 * root * b.nu);
    }
  }
  const double mi = median(init_err);
  const double mr = median(random_err);
  const bool ok = mi < 0.5 && mi < mr && worst_violation <= 1e-8;
  return {ok, "median init error " + fmt("%.3g", mi) + " (< 0.5), median random-start " +
                  fmt("%.3g", mr) + ", worst constraint excess " + fmt("%.3g", worst_violation) +
                  " (tol 1e-8)"};
}

Outcome metric_invariance() {
  const Dimensions d{64, 32, 6, 5, 2};
  const Instance inst = synthesize(TrialSpec{d, 7});
  std::mt19937_64 rng(1010);
  const BlockFactorPair est = inst.truth + cplx(0.2) * oracle::random_pair(d, rng);
  const double base = relative_error(est, inst.truth);
  std::uniform_real_distribution<double> logmag(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    BlockFactorPair s = est;
    for (int n = 0; n < d.N; ++n) {
      const cplx alpha = std::polar(std::exp(logmag(rng)), phase(rng));
      s.channels[n] *= alpha;
      s.coefficients[n] /= std::conj(alpha);
    }
    worst = std::max(worst, std::abs(relative_error(s, inst.truth) - base));
  }
  return {worst <= 1e-12, "max change " + fmt("%.3g", worst) + " over 100 draws (tol 1e-12)"};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "adjoint identity", 10.0, adjoint_identity},
      {2, "dense-oracle equivalence", 30.0, dense_equivalence},
      {3, "gradient correctness", 30.0, gradient_check},
      {4, "exhaustive isometry", 120.0, exhaustive_isometry},
      {5, "scaled recovery", 300.0, scaled_recovery},
      {6, "Q-monotonicity", 1200.0, q_monotone},
      {7, "SNR trend", 600.0, snr_trend},
      {8, "monotone loss", 0.0, monotone_loss},
      {9, "initialization quality", 0.0, init_quality},
      {10, "metric invariance", 0.0, metric_invariance},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception &e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0.0 || secs < c.limit_seconds;
    const bool pass = out.ok && in_time;
    failures += pass ? 0 : 1;
    std::string line = std::string(pass ? "[PASS] " : "[FAIL] ") + std::to_string(c.id) + " " +
                       c.name + ": " + out.detail + ", " + fmt("%.1f s", secs);
    if (c.limit_seconds > 0.0)
      line += " (limit " + fmt("%.0f s", c.limit_seconds) + ")";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
