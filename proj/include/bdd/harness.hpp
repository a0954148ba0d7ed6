#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdd/instance_gen.hpp"
#include "bdd/solver.hpp"

namespace bdd {

// ---------------------------------------------------------------------------
// Single trials

enum class CoherenceMode {
  Oracle,    ///< mu, nu of the ground truth
  Fixed,     ///< the bounds already in solver.coherence
  Estimated  ///< mu, nu of the unprojected spectral factors
};

struct TrialOptions {
  SolverConfig solver;
  CoherenceMode coherence = CoherenceMode::Estimated;
  double threshold = 1e-2; ///< success iff final relative error < threshold

  void validate() const;
};

struct TrialRecord {
  Dimensions dims;
  std::uint64_t seed = 0;
  std::optional<double> snr_db;
  int iterations = 0;
  double rel_error = 0.0;
  double init_error = 0.0; ///< relative error of the starting point
  bool success = false;
  bool diverged = false;   ///< numerical failure, recorded as a failed trial
  std::string stop_reason;
  double wall_seconds = 0.0;
  /// Largest single-step increase of the recorded F~ (<= 0 when monotone).
  double max_increase = 0.0;
};

/// synthesize -> initialize -> solve -> relative_error, deterministic per
/// spec.seed. Noisy specs disable the relative-error stop and use the realized
/// noise energy in the default penalty weight.
TrialRecord run_trial(const TrialSpec &spec, const TrialOptions &opts);

/// Seed of trial `trial` in the cell with dimensions `dims`; independent of
/// grid layout and worker count.
std::uint64_t trial_seed(std::uint64_t base, const Dimensions &dims, int trial);

/// Runs f(0), ..., f(count - 1) on up to `workers` threads. Results are stored
/// by index, so the output never depends on scheduling.
template <class T>
std::vector<T> parallel_map(int count, int workers,
                            const std::function<T(int)> &f);

// ---------------------------------------------------------------------------
// Phase transition

struct SweepGrid {
  std::vector<int> K;
  std::vector<int> M;
  std::vector<int> Q;
  int L = 320;
  int N = 2;
  int trials = 10;
  std::uint64_t base_seed = 1;

  /// Every (K, M, Q) point must satisfy the Dimensions invariants.
  void validate() const;
  std::vector<Dimensions> cells() const; ///< ordered by (Q, K, M)
};

/// L = 320, N = 2, Q in {80, 160, 240, 320}, K, M in {2, 4, ..., 24}.
SweepGrid desk_phase_grid();
/// L = 3200, N = 2, Q in {800, 1600, 2400, 3200}, K, M in {25, 50, ..., 400}.
SweepGrid paper_phase_grid();

struct CellSummary {
  Dimensions dims;
  int trials = 0;
  int successes = 0;
  double mean_error = 0.0;
  double max_increase = 0.0; ///< largest F~ increase over the cell's trials
  double success_fraction() const;
};

/// CSV columns: K,M,Q,L,N,trials,successes,mean_error,success_fraction,
/// threshold,base_seed. Rows sorted by (Q, K, M). The output file is opened
/// before any trial runs; failure raises IoError.
std::vector<CellSummary>
run_phase_transition(const SweepGrid &grid, const TrialOptions &opts, int workers,
                     const std::optional<std::filesystem::path> &out);

struct MonotonicitySummary {
  int pairs = 0;       ///< (K, M) pairs with at least two Q values
  int monotone = 0;    ///< success fraction non-decreasing in Q
  double fraction() const;
};

MonotonicitySummary q_monotonicity(const std::vector<CellSummary> &cells);

// ---------------------------------------------------------------------------
// SNR sweep

struct SnrPoint {
  std::optional<double> snr_db; ///< unset: noiseless
  int trials = 0;
  int successes = 0;
  double mean_rel_err = 0.0;  ///< exp(mean log error)
  double std_log10 = 0.0;     ///< standard deviation of log10 error
  double arith_mean = 0.0;
  double max_increase = 0.0; ///< largest F~ increase over the point's trials
};

/// One point per SNR plus a noiseless point when `include_noiseless`. Trial t
/// uses the same truth and noise direction at every SNR. CSV columns:
/// snr_db,mean_rel_err,std,arith_mean_rel_err,successes,trials,L,Q,M,K,N,
/// threshold,base_seed.
std::vector<SnrPoint>
run_snr_sweep(const Dimensions &dims, const std::vector<double> &snrs,
              bool include_noiseless, int trials, std::uint64_t base_seed,
              const TrialOptions &opts, int workers,
              const std::optional<std::filesystem::path> &out);

// ---------------------------------------------------------------------------
// Transmitter scaling

struct ScalingOptions {
  int n_max = 4;
  int K = 8;
  int M = 8;
  int l_step = 8;      ///< L grid: multiples of l_step with Q = L
  int l_max = 640;
  int trials = 10;
  double required = 0.9; ///< success fraction needed at L_min
  std::uint64_t base_seed = 1;

  void validate() const;
};

struct ScalingRow {
  int N = 0;
  std::optional<int> l_min; ///< unset: not reached within l_max
  int evaluations = 0;      ///< grid points evaluated by the bisection
};

/// Smallest L on the grid with success fraction >= required, found by
/// bisection under the assumption that success is monotone in L.
/// CSV columns: N,L_min,K,M,trials,required,threshold,evaluations,base_seed.
std::vector<ScalingRow>
run_transmitter_sweep(const ScalingOptions &scaling, const TrialOptions &opts,
                      int workers, const std::optional<std::filesystem::path> &out);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double> &x, const std::vector<double> &y);

// ---------------------------------------------------------------------------
// Convergence trace

/// CSV columns: t,f_tilde,f,g,rel_err,grad_norm,eta,L,Q,M,K,N,seed,snr_db.
SolveResult run_convergence_trace(const TrialSpec &spec, const TrialOptions &opts,
                                  const std::optional<std::filesystem::path> &out);

// ---------------------------------------------------------------------------
// Numerical probes

enum class ProbeKind { Adjoint, Isometry, Rip, Gradcheck };

ProbeKind parse_probe_kind(const std::string &name);
std::string to_string(ProbeKind kind);

struct ProbeParams {
  Dimensions dims;
  std::uint64_t seed = 1;
  int draws = 100; ///< instances (adjoint, gradcheck) or sign draws (rip)
};

struct ProbeReport {
  ProbeKind kind = ProbeKind::Adjoint;
  ProbeParams params;
  std::string statistic; ///< name of `value`
  double value = 0.0;
  int samples = 0;
  /// rip: fraction of ratios in [0.75, 1.25] and a histogram over [0, 2]
  double fraction_in_band = 0.0;
  std::vector<double> bin_edges;
  std::vector<int> bin_counts;
};

/// Largest supported Q N for the exhaustive isometry probe.
inline constexpr int kMaxExhaustiveSigns = 20;

/// adjoint: max relative mismatch of <A(Z), w> and <Z, A^*(w)>.
/// isometry: exhaustive mean over all modulation sign patterns of
///   ||A(W)||^2 / ||W||_F^2 for a fixed difference W = Z - Z0.
/// rip: the same ratio over `draws` random sign patterns.
/// gradcheck: max relative mismatch of a central difference of F~ against
///   2 Re<grad F~, delta>.
/// Throws InvalidArgument when the isometry probe would exceed
/// kMaxExhaustiveSigns sign bits.
ProbeReport run_probe(ProbeKind kind, const ProbeParams &params);

std::string probe_report_json(const ProbeReport &report);
/// Writes the JSON report; IoError on failure.
void write_probe_report(const ProbeReport &report,
                        const std::filesystem::path &path);

} // namespace bdd

#include "bdd/detail/parallel.hpp"
