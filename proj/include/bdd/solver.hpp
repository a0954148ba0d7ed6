#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdd/objective.hpp"
#include "bdd/types.hpp"

namespace bdd {

// ---------------------------------------------------------------------------
// Leading singular triple

struct SingularTriple {
  double value = 0.0;
  CVector left;
  CVector right;
  int iterations = 0;
  bool converged = false; ///< false: best triple after max_iters
};

/// Top singular triple by power iteration on A^* A. Exit when
/// ||A^* u - d v|| <= tol * d. Throws DegenerateInput for a zero matrix.
SingularTriple leading_singular_triple(const CMatrix &a, int max_iters = 2000,
                                       double tol = 1e-10);

// ---------------------------------------------------------------------------
// Incoherence projection

/// Tall isometry B (B^* B = I) whose peak entry magnitude is constrained.
class IncoherenceBasis {
public:
  virtual ~IncoherenceBasis() = default;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual CVector apply(const CVector &z) const = 0;
  virtual CVector adjoint(const CVector &v) const = 0;
  bool is_square() const { return rows() == cols(); }
};

/// First `width` columns of the unitary L-point DFT.
class DftSliceBasis final : public IncoherenceBasis {
public:
  DftSliceBasis(int L, int width);
  int rows() const override { return length_; }
  int cols() const override { return width_; }
  CVector apply(const CVector &z) const override;
  CVector adjoint(const CVector &v) const override;

private:
  int length_;
  int width_;
};

/// A real orthonormal coding matrix.
class CodingBasis final : public IncoherenceBasis {
public:
  explicit CodingBasis(RMatrix coding);
  int rows() const override { return static_cast<int>(coding_.rows()); }
  int cols() const override { return static_cast<int>(coding_.cols()); }
  CVector apply(const CVector &z) const override;
  CVector adjoint(const CVector &v) const override;

private:
  RMatrix coding_;
};

struct ProjectionOptions {
  double tol = 1e-8;
  int max_iters = 500;
  /// Use entrywise clipping when the basis is square. Disabled in tests to
  /// exercise the iterative path against the closed form.
  bool closed_form_when_square = true;
};

struct ProjectionResult {
  CVector point;
  int iterations = 0;
  bool converged = false; ///< false: last iterate, still made feasible
};

/// Euclidean projection of g onto { z : sqrt(rows) ||B z||_inf <= bound }.
///
/// Solved on the dual (an l1-regularized least squares in the rows of B) with
/// restarted accelerated proximal gradient; the returned point is radially
/// pulled back into the set if the last iterate still violates it.
ProjectionResult project_incoherent(const CVector &g, const IncoherenceBasis &basis,
                                    double bound,
                                    const ProjectionOptions &opts = {});

// ---------------------------------------------------------------------------
// Configuration

enum class StepMode { Backtracking, Fixed };
enum class UpdateSchedule { Simultaneous, Sequential };

/// Coherence bounds (mu, nu) used by the initializer and the penalty.
struct CoherenceBounds {
  double mu = 1.0;
  double nu = 1.0;
};

struct SolverConfig {
  StepMode step_mode = StepMode::Backtracking;
  /// Fixed step, or the initial trial step for backtracking. Zero selects
  /// 1 / (2 ||A||^2 d).
  double eta = 0.0;
  int max_iters = 5000;
  /// Stop once ||grad F~|| < grad_tol * d^2.
  double grad_tol = 1e-7;
  /// Stop once the relative error to a supplied truth drops below this.
  /// Non-positive disables the check.
  double rel_err_tol = 1e-3;
  CoherenceBounds coherence;
  /// Penalty weight; unset selects d^2 + 2 noise_energy.
  std::optional<double> rho;
  /// ||e||^2 when the noise realization is known, else 0.
  double noise_energy = 0.0;
  /// Full override of the penalty parameters (otherwise derived from the
  /// initializer's singular values).
  std::optional<PenaltyParams> penalty;
  int power_iters = 2000;
  double power_tol = 1e-10;
  ProjectionOptions projection;
  UpdateSchedule schedule = UpdateSchedule::Simultaneous;
  int max_backtracks = 60;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Initialization

struct InitResult {
  std::vector<double> d_n;      ///< leading singular values of A_n^*(y)
  BlockFactorPair raw_factors;  ///< unit singular vectors
  BlockFactorPair start;        ///< projected, sqrt(d_n)-scaled start
  bool power_converged = true;
  bool projection_converged = true;
};

/// Spectral initialization with incoherence projections.
InitResult initialize(const MeasurementEnsemble &ens, const ObservationVector &y,
                      const CoherenceBounds &bounds,
                      const SolverConfig &cfg = {});

/// Penalty parameters derived from singular-value estimates:
/// d = sqrt(sum d_n^2), rho = cfg.rho or d^2 + 2 cfg.noise_energy.
PenaltyParams derive_penalty(const std::vector<double> &d_n,
                             const SolverConfig &cfg);

// ---------------------------------------------------------------------------
// Descent

struct StepReport {
  double eta = 0.0;          ///< step actually taken (0 if rejected)
  int backtracks = 0;
  bool accepted = false;
  ObjectiveValue before;
  ObjectiveValue after;
  double grad_norm = 0.0;    ///< ||grad F~|| at the incoming iterate
};

/// One Wirtinger gradient update of all 2N blocks from step `eta`.
///
/// Simultaneous schedule: every block moves along the gradient evaluated at
/// the incoming iterate. Sequential: components are updated in order, each
/// from a fresh gradient. In backtracking mode eta is halved until
/// F~(next) <= F~(z) - eta ||grad||^2. Throws NumericalFailure on a
/// non-finite gradient.
std::pair<BlockFactorPair, StepReport>
descend_step(const MeasurementEnsemble &ens, const BlockFactorPair &z,
             const ObservationVector &y, const PenaltyParams &penalty,
             const SolverConfig &cfg, double eta);

// ---------------------------------------------------------------------------
// Full solve

struct TraceRow {
  int t = 0;
  double f_tilde = 0.0;
  double f = 0.0;
  double g = 0.0;
  double rel_err = 0.0; ///< NaN without a truth
  double grad_norm = 0.0;
  double eta = 0.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
};

enum class StopReason { MaxIterations, GradientTolerance, RelativeError, Stalled };

std::string to_string(StopReason r);

struct SolveResult {
  BlockFactorPair factors; ///< balanced, phase-normalized estimate
  SolveTrace trace;
  std::optional<InitResult> init;
  PenaltyParams penalty;
  double eta0 = 0.0;
  int iterations = 0;
  StopReason reason = StopReason::MaxIterations;
};

/// Initialization followed by regularized Wirtinger gradient descent.
///
/// With `start` the initializer is skipped and d_n are taken from the start's
/// factor norms. Throws DivergenceError when F~ exceeds ten times its initial
/// value in fixed-step mode.
SolveResult solve(const MeasurementEnsemble &ens, const ObservationVector &y,
                  const SolverConfig &cfg,
                  const std::optional<BlockFactorPair> &truth = std::nullopt,
                  const std::optional<BlockFactorPair> &start = std::nullopt);

/// Rescale each component to ||h_n|| = ||x_n|| with the first nonzero entry of
/// h_n real-positive. Leaves every h_n x_n^* unchanged.
BlockFactorPair normalize_factors(BlockFactorPair z);

} // namespace bdd
