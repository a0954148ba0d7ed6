#include "bdd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdd/errors.hpp"
#include "bdd/instance_gen.hpp"
#include "bdd/spectral_ops.hpp"

namespace bdd {

SingularTriple leading_singular_triple(const CMatrix &a, int max_iters,
                                       double tol) {
  if (a.size() == 0 || a.norm() == 0.0)
    throw DegenerateInput("leading_singular_triple: zero matrix");
  if (max_iters < 1 || !(tol > 0.0))
    throw InvalidArgument("leading_singular_triple: need max_iters >= 1, tol > 0");

  // start from A^* a_j for the heaviest column a_j; never orthogonal to the
  // top right singular vector unless A is degenerate
  Eigen::Index heaviest = 0;
  a.colwise().squaredNorm().maxCoeff(&heaviest);
  CVector v = a.adjoint() * a.col(heaviest);
  v.normalize();

  SingularTriple out;
  for (int it = 1; it <= max_iters; ++it) {
    CVector u = a * v;
    const double d = u.norm();
    u /= d;
    CVector back = a.adjoint() * u;
    const double resid = (back - d * v).norm();
    out.value = d;
    out.left = u;
    out.right = v;
    out.iterations = it;
    if (resid <= tol * d) {
      out.converged = true;
      break;
    }
    v = back.normalized();
  }
  return out;
}

void SolverConfig::validate() const {
  if (step_mode == StepMode::Fixed && !(eta > 0.0))
    throw InvalidArgument("fixed step mode needs eta > 0");
  if (eta < 0.0)
    throw InvalidArgument("eta must be non-negative");
  if (max_iters < 1)
    throw InvalidArgument("max_iters must be at least 1");
  if (!(grad_tol > 0.0))
    throw InvalidArgument("grad_tol must be positive");
  if (!(coherence.mu > 0.0) || !(coherence.nu > 0.0))
    throw InvalidArgument("coherence bounds must be positive");
  if (rho && !(*rho > 0.0))
    throw InvalidArgument("rho must be positive");
  if (noise_energy < 0.0)
    throw InvalidArgument("noise energy must be non-negative");
  if (power_iters < 1 || !(power_tol > 0.0))
    throw InvalidArgument("power iteration controls must be positive");
  if (!(projection.tol > 0.0) || projection.max_iters < 1)
    throw InvalidArgument("projection controls must be positive");
  if (max_backtracks < 0)
    throw InvalidArgument("max_backtracks must be non-negative");
}

InitResult initialize(const MeasurementEnsemble &ens, const ObservationVector &y,
                      const CoherenceBounds &bounds, const SolverConfig &cfg) {
  const Dimensions &d = ens.dims();
  y.validate(d);
  if (y.samples.norm() == 0.0)
    throw DegenerateInput("initialize: observation is zero");
  if (!(bounds.mu > 0.0) || !(bounds.nu > 0.0))
    throw InvalidArgument("initialize: coherence bounds must be positive");

  InitResult out;
  const DftSliceBasis spectrum(d.L, d.M);
  for (int n = 0; n < d.N; ++n) {
    const SingularTriple top = leading_singular_triple(
        adjoint_component(ens, n, y.samples), cfg.power_iters, cfg.power_tol);
    out.power_converged = out.power_converged && top.converged;
    const double root = std::sqrt(top.value);

    const ProjectionResult u = project_incoherent(
        root * top.left, spectrum, 2.0 * root * bounds.mu, cfg.projection);
    const ProjectionResult v =
        project_incoherent(root * top.right, CodingBasis(ens.coding(n)),
                           2.0 * root * bounds.nu, cfg.projection);
    out.projection_converged =
        out.projection_converged && u.converged && v.converged;

    out.d_n.push_back(top.value);
    out.raw_factors.channels.push_back(top.left);
    out.raw_factors.coefficients.push_back(top.right);
    out.start.channels.push_back(u.point);
    out.start.coefficients.push_back(v.point);
  }
  return out;
}

PenaltyParams derive_penalty(const std::vector<double> &d_n,
                             const SolverConfig &cfg) {
  PenaltyParams p;
  double sum_sq = 0.0;
  for (double v : d_n)
    sum_sq += v * v;
  p.d = std::sqrt(sum_sq);
  p.d_n = d_n;
  p.rho = cfg.rho ? *cfg.rho : p.d * p.d + 2.0 * cfg.noise_energy;
  p.mu = cfg.coherence.mu;
  p.nu = cfg.coherence.nu;
  return p;
}

namespace {

void require_finite(const BlockFactorPair &g) {
  if (!all_finite(g))
    throw NumericalFailure("non-finite gradient encountered");
}

// Trial update z - eta * grad restricted to component `only` (or all if < 0).
BlockFactorPair stepped(const BlockFactorPair &z, const BlockFactorPair &grad,
                        double eta, int only = -1) {
  BlockFactorPair out = z;
  for (std::size_t n = 0; n < z.channels.size(); ++n) {
    if (only >= 0 && static_cast<int>(n) != only)
      continue;
    out.channels[n] -= eta * grad.channels[n];
    out.coefficients[n] -= eta * grad.coefficients[n];
  }
  return out;
}

double block_squared_norm(const BlockFactorPair &g, int only) {
  if (only < 0)
    return squared_norm(g);
  const auto n = static_cast<std::size_t>(only);
  return g.channels[n].squaredNorm() + g.coefficients[n].squaredNorm();
}

// One (possibly backtracked) move along the gradient restricted to `only`.
struct LineResult {
  BlockFactorPair next;
  ObjectiveValue value;
  std::optional<PointEval> eval; ///< evaluation at `next` when it moved
  double eta = 0.0;
  int backtracks = 0;
  bool accepted = false;
};

LineResult line_step(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                     const ObservationVector &y, const PenaltyParams &p,
                     const SolverConfig &cfg, const ObjectiveEval &at_z,
                     double eta, int only) {
  LineResult res;
  if (cfg.step_mode == StepMode::Fixed || eta == 0.0) {
    res.next = stepped(z, at_z.gradient, eta, only);
    res.eval = evaluate_point(ens, res.next, y, p);
    res.value = res.eval->value;
    res.eta = eta;
    res.accepted = true;
    return res;
  }
  const double slope = block_squared_norm(at_z.gradient, only);
  const double start = at_z.value.total();
  double trial = eta;
  for (int b = 0; b <= cfg.max_backtracks; ++b) {
    BlockFactorPair cand = stepped(z, at_z.gradient, trial, only);
    PointEval val = evaluate_point(ens, cand, y, p);
    const double total = val.value.total();
    if (std::isfinite(total) && total <= start - trial * slope) {
      res.next = std::move(cand);
      res.value = val.value;
      res.eval = std::move(val);
      res.eta = trial;
      res.backtracks = b;
      res.accepted = true;
      return res;
    }
    trial *= 0.5;
  }
  res.next = z;
  res.value = at_z.value;
  res.backtracks = cfg.max_backtracks;
  return res;
}

} // namespace

namespace {

struct Descent {
  BlockFactorPair next;
  StepReport report;
  std::optional<PointEval> eval; ///< evaluation at `next`, if known
};

Descent descend_from(const MeasurementEnsemble &ens, const BlockFactorPair &z,
                     const ObservationVector &y, const PenaltyParams &penalty,
                     const SolverConfig &cfg, double eta, ObjectiveEval at_z) {
  StepReport rep;
  require_finite(at_z.gradient);
  rep.before = at_z.value;
  rep.grad_norm = std::sqrt(squared_norm(at_z.gradient));

  if (cfg.schedule == UpdateSchedule::Simultaneous) {
    LineResult line = line_step(ens, z, y, penalty, cfg, at_z, eta, -1);
    rep.eta = line.eta;
    rep.backtracks = line.backtracks;
    rep.accepted = line.accepted;
    rep.after = line.value;
    return {std::move(line.next), rep, std::move(line.eval)};
  }

  BlockFactorPair cur = z;
  std::optional<PointEval> eval;
  for (int n = 0; n < ens.dims().N; ++n) {
    if (n > 0) {
      at_z = eval ? gradient_at(ens, cur, penalty, *eval)
                  : objective_with_gradient(ens, cur, y, penalty);
      require_finite(at_z.gradient);
    }
    LineResult line = line_step(ens, cur, y, penalty, cfg, at_z, eta, n);
    rep.backtracks += line.backtracks;
    rep.accepted = rep.accepted || line.accepted;
    rep.eta = std::max(rep.eta, line.eta);
    rep.after = line.value;
    if (line.eval)
      eval = std::move(line.eval);
    cur = std::move(line.next);
  }
  return {std::move(cur), rep, std::move(eval)};
}

} // namespace

std::pair<BlockFactorPair, StepReport>
descend_step(const MeasurementEnsemble &ens, const BlockFactorPair &z,
             const ObservationVector &y, const PenaltyParams &penalty,
             const SolverConfig &cfg, double eta) {
  cfg.validate();
  if (!(eta >= 0.0))
    throw InvalidArgument("descend_step: eta must be non-negative");
  Descent out = descend_from(ens, z, y, penalty, cfg, eta,
                             objective_with_gradient(ens, z, y, penalty));
  return {std::move(out.next), out.report};
}

std::string to_string(StopReason r) {
  switch (r) {
  case StopReason::MaxIterations:
    return "max_iterations";
  case StopReason::GradientTolerance:
    return "gradient_tolerance";
  case StopReason::RelativeError:
    return "relative_error";
  case StopReason::Stalled:
    return "stalled";
  }
  return "unknown";
}

BlockFactorPair normalize_factors(BlockFactorPair z) {
  for (std::size_t n = 0; n < z.channels.size(); ++n) {
    CVector &h = z.channels[n];
    CVector &x = z.coefficients[n];
    const double hn = h.norm();
    const double xn = x.norm();
    if (hn == 0.0 || xn == 0.0)
      continue;
    const double s = std::sqrt(xn / hn);
    h *= s;
    x /= s;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      if (h[i] != cplx(0.0, 0.0)) {
        // (a h, conj(a)^{-1} x) with |a| = 1 keeps h x^*
        const cplx phase = std::conj(h[i]) / std::abs(h[i]);
        h *= phase;
        x *= phase;
        break;
      }
    }
  }
  return z;
}

SolveResult solve(const MeasurementEnsemble &ens, const ObservationVector &y,
                  const SolverConfig &cfg,
                  const std::optional<BlockFactorPair> &truth,
                  const std::optional<BlockFactorPair> &start) {
  cfg.validate();
  const Dimensions &dims = ens.dims();
  y.validate(dims);
  if (truth)
    truth->validate(dims);

  SolveResult out;
  BlockFactorPair z;
  std::vector<double> scales;
  if (start) {
    start->validate(dims);
    z = *start;
    for (int n = 0; n < dims.N; ++n) {
      const double dn = z.channels[n].norm() * z.coefficients[n].norm();
      if (dn == 0.0)
        throw DegenerateInput("solve: explicit start has a zero component");
      scales.push_back(dn);
    }
  } else {
    out.init = initialize(ens, y, cfg.coherence, cfg);
    z = out.init->start;
    scales = out.init->d_n;
  }
  out.penalty = cfg.penalty ? *cfg.penalty : derive_penalty(scales, cfg);
  out.penalty.validate(dims.N);
  const double d = out.penalty.d;

  double eta = cfg.eta;
  if (eta == 0.0) {
    const double a_norm = operator_norm(ens, 200, 1e-6).value;
    eta = 1.0 / (2.0 * a_norm * a_norm * d);
  }
  out.eta0 = eta;

  const double grad_stop = cfg.grad_tol * d * d;
  const bool track_error = truth.has_value();
  auto rel_err = [&](const BlockFactorPair &w) {
    return track_error ? relative_error(w, *truth)
                       : std::numeric_limits<double>::quiet_NaN();
  };

  double initial_total = std::numeric_limits<double>::quiet_NaN();
  std::optional<PointEval> cached;
  for (int t = 0;; ++t) {
    ObjectiveEval ev = cached ? gradient_at(ens, z, out.penalty, *cached)
                              : objective_with_gradient(ens, z, y, out.penalty);
    require_finite(ev.gradient);
    const double gnorm = std::sqrt(squared_norm(ev.gradient));
    const double err = rel_err(z);
    if (t == 0)
      initial_total = ev.value.total();
    out.trace.rows.push_back(
        {t, ev.value.total(), ev.value.F, ev.value.G, err, gnorm, 0.0});
    out.iterations = t;

    if (cfg.step_mode == StepMode::Fixed && ev.value.total() > 10.0 * initial_total)
      throw DivergenceError("objective grew tenfold under a fixed step; "
                            "use a smaller eta");
    if (track_error && cfg.rel_err_tol > 0.0 && err < cfg.rel_err_tol) {
      out.reason = StopReason::RelativeError;
      break;
    }
    if (gnorm < grad_stop) {
      out.reason = StopReason::GradientTolerance;
      break;
    }
    if (t >= cfg.max_iters) {
      out.reason = StopReason::MaxIterations;
      break;
    }

    Descent step = descend_from(ens, z, y, out.penalty, cfg, eta, std::move(ev));
    if (!step.report.accepted) {
      out.reason = StopReason::Stalled;
      break;
    }
    z = std::move(step.next);
    cached = std::move(step.eval);
    out.trace.rows.back().eta = step.report.eta;
  }
  out.factors = normalize_factors(std::move(z));
  return out;
}

} // namespace bdd
