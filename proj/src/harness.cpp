#include "bdd/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bdd/errors.hpp"
#include "bdd/objective.hpp"
#include "bdd/spectral_ops.hpp"

namespace bdd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Opened eagerly so an unwritable path fails before any computation.
class CsvSink {
public:
  explicit CsvSink(const std::optional<std::filesystem::path> &path) {
    if (!path)
      return;
    file_.open(*path, std::ios::out | std::ios::trunc);
    if (!file_)
      throw IoError("cannot open output for writing: " + path->string());
    file_.imbue(std::locale::classic());
    file_ << std::setprecision(17);
    path_ = *path;
  }

  bool active() const { return file_.is_open(); }
  std::ostream &stream() { return file_; }

  void finish() {
    if (!active())
      return;
    file_.flush();
    if (!file_)
      throw IoError("failed writing output: " + path_.string());
    file_.close();
  }

private:
  std::ofstream file_;
  std::filesystem::path path_;
};

std::string format_snr(const std::optional<double> &snr) {
  if (!snr)
    return "inf";
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << *snr;
  return s.str();
}

CVector random_complex(std::mt19937_64 &rng, int len) {
  std::normal_distribution<double> gauss;
  CVector v(len);
  for (int i = 0; i < len; ++i) {
    const double re = gauss(rng);
    v[i] = cplx(re, gauss(rng));
  }
  return v;
}

MeasurementEnsemble default_ensemble(const Dimensions &d, std::uint64_t seed) {
  std::vector<RVector> modulation;
  std::vector<RMatrix> coding;
  for (int n = 0; n < d.N; ++n) {
    modulation.push_back(make_modulation(d.Q, n, seed));
    coding.push_back(make_coding_matrix(d.Q, d.K, n, d.N));
  }
  return MeasurementEnsemble(d, std::move(modulation), std::move(coding));
}

CoherenceBounds estimated_bounds(const Instance &inst, const SolverConfig &cfg) {
  const Dimensions &d = inst.ensemble.dims();
  // bounds at their largest possible values make the projections inactive
  const CoherenceBounds loose{std::sqrt(static_cast<double>(d.L)),
                              std::sqrt(static_cast<double>(d.Q))};
  const InitResult raw = initialize(inst.ensemble, inst.observation, loose, cfg);
  const CoherenceReport rep = coherences(inst.ensemble, raw.raw_factors);
  return {std::sqrt(rep.mu_sq), std::sqrt(rep.nu_sq)};
}

SolverConfig trial_config(const Instance &inst, const TrialSpec &spec,
                          const TrialOptions &opts) {
  SolverConfig cfg = opts.solver;
  if (opts.coherence == CoherenceMode::Oracle) {
    const CoherenceReport rep = coherences(inst.ensemble, inst.truth);
    cfg.coherence = {std::sqrt(rep.mu_sq), std::sqrt(rep.nu_sq)};
  } else if (opts.coherence == CoherenceMode::Estimated) {
    cfg.coherence = estimated_bounds(inst, cfg);
  }
  if (spec.snr_db) {
    cfg.rel_err_tol = 0.0;
    if (inst.observation.noise)
      cfg.noise_energy = inst.observation.noise->squaredNorm();
  }
  return cfg;
}

double max_increase(const SolveTrace &trace) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < trace.rows.size(); ++i)
    worst = std::max(worst, trace.rows[i].f_tilde - trace.rows[i - 1].f_tilde);
  return trace.rows.size() > 1 ? worst : 0.0;
}

void require_workers(int workers) {
  if (workers < 1)
    throw InvalidArgument("workers must be at least 1");
}

} // namespace

// ---------------------------------------------------------------------------

void TrialOptions::validate() const {
  solver.validate();
  if (!(threshold > 0.0))
    throw InvalidArgument("success threshold must be positive");
}

TrialRecord run_trial(const TrialSpec &spec, const TrialOptions &opts) {
  opts.validate();
  spec.dims.validate();
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.dims = spec.dims;
  rec.seed = spec.seed;
  rec.snr_db = spec.snr_db;

  const Instance inst = synthesize(spec);
  try {
    const SolverConfig cfg = trial_config(inst, spec, opts);
    const SolveResult res = solve(inst.ensemble, inst.observation, cfg, inst.truth);
    rec.iterations = res.iterations;
    rec.rel_error = relative_error(res.factors, inst.truth);
    rec.init_error = res.trace.rows.front().rel_err;
    rec.stop_reason = to_string(res.reason);
    rec.max_increase = max_increase(res.trace);
    rec.success = rec.rel_error < opts.threshold;
  } catch (const NumericalFailure &) {
    rec.diverged = true;
    rec.rel_error = kNaN;
    rec.init_error = kNaN;
    rec.stop_reason = "numerical_failure";
    rec.success = false;
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::uint64_t trial_seed(std::uint64_t base, const Dimensions &dims, int trial) {
  std::uint64_t key = 0xcbf29ce484222325ULL;
  for (int v : {dims.L, dims.Q, dims.M, dims.K, dims.N}) {
    key ^= static_cast<std::uint64_t>(v);
    key *= 0x100000001b3ULL;
  }
  return derive_seed(base, key, static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------------------

void SweepGrid::validate() const {
  if (K.empty() || M.empty() || Q.empty())
    throw InvalidArgument("sweep grid axes must be non-empty");
  if (trials < 1)
    throw InvalidArgument("trials per cell must be at least 1");
  for (const Dimensions &d : cells())
    d.validate();
}

std::vector<Dimensions> SweepGrid::cells() const {
  std::vector<Dimensions> out;
  for (int q : Q)
    for (int k : K)
      for (int m : M)
        out.push_back(Dimensions{L, q, m, k, N});
  return out;
}

SweepGrid desk_phase_grid() {
  SweepGrid g;
  g.L = 320;
  g.N = 2;
  g.Q = {80, 160, 240, 320};
  for (int v = 2; v <= 24; v += 2) {
    g.K.push_back(v);
    g.M.push_back(v);
  }
  return g;
}

SweepGrid paper_phase_grid() {
  SweepGrid g;
  g.L = 3200;
  g.N = 2;
  g.Q = {800, 1600, 2400, 3200};
  for (int v = 25; v <= 400; v += 25) {
    g.K.push_back(v);
    g.M.push_back(v);
  }
  return g;
}

double CellSummary::success_fraction() const {
  return trials > 0 ? static_cast<double>(successes) / trials : 0.0;
}

std::vector<CellSummary>
run_phase_transition(const SweepGrid &grid, const TrialOptions &opts, int workers,
                     const std::optional<std::filesystem::path> &out) {
  grid.validate();
  opts.validate();
  require_workers(workers);
  CsvSink sink(out);

  const std::vector<Dimensions> cells = grid.cells();
  const int per_cell = grid.trials;
  const int total = static_cast<int>(cells.size()) * per_cell;
  const std::vector<TrialRecord> records = parallel_map<TrialRecord>(
      total, workers, [&](int i) {
        TrialSpec spec;
        spec.dims = cells[static_cast<std::size_t>(i / per_cell)];
        spec.seed = trial_seed(grid.base_seed, spec.dims, i % per_cell);
        return run_trial(spec, opts);
      });

  std::vector<CellSummary> summary;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary cell;
    cell.dims = cells[c];
    cell.trials = per_cell;
    double err_sum = 0.0;
    int finite = 0;
    for (int t = 0; t < per_cell; ++t) {
      const TrialRecord &r = records[c * static_cast<std::size_t>(per_cell) + t];
      cell.successes += r.success ? 1 : 0;
      cell.max_increase = std::max(cell.max_increase, r.max_increase);
      if (std::isfinite(r.rel_error)) {
        err_sum += r.rel_error;
        ++finite;
      }
    }
    cell.mean_error = finite > 0 ? err_sum / finite : kNaN;
    summary.push_back(cell);
  }

  if (sink.active()) {
    std::ostream &os = sink.stream();
    os << "K,M,Q,L,N,trials,successes,mean_error,success_fraction,threshold,base_seed\n";
    for (const CellSummary &c : summary)
      os << c.dims.K << ',' << c.dims.M << ',' << c.dims.Q << ',' << c.dims.L << ','
         << c.dims.N << ',' << c.trials << ',' << c.successes << ',' << c.mean_error
         << ',' << c.success_fraction() << ',' << opts.threshold << ','
         << grid.base_seed << '\n';
    sink.finish();
  }
  return summary;
}

double MonotonicitySummary::fraction() const {
  return pairs > 0 ? static_cast<double>(monotone) / pairs : 1.0;
}

MonotonicitySummary q_monotonicity(const std::vector<CellSummary> &cells) {
  std::map<std::tuple<int, int, int, int>, std::map<int, double>> by_pair;
  for (const CellSummary &c : cells)
    by_pair[{c.dims.K, c.dims.M, c.dims.L, c.dims.N}][c.dims.Q] = c.success_fraction();
  MonotonicitySummary s;
  for (const auto &[key, series] : by_pair) {
    if (series.size() < 2)
      continue;
    ++s.pairs;
    bool ok = true;
    double prev = -1.0;
    for (const auto &[q, frac] : series) {
      if (frac < prev)
        ok = false;
      prev = frac;
    }
    s.monotone += ok ? 1 : 0;
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<SnrPoint>
run_snr_sweep(const Dimensions &dims, const std::vector<double> &snrs,
              bool include_noiseless, int trials, std::uint64_t base_seed,
              const TrialOptions &opts, int workers,
              const std::optional<std::filesystem::path> &out) {
  dims.validate();
  opts.validate();
  require_workers(workers);
  if (trials < 1)
    throw InvalidArgument("trials per SNR point must be at least 1");
  std::vector<std::optional<double>> levels;
  for (double s : snrs) {
    if (!std::isfinite(s))
      throw InvalidArgument("SNR values must be finite; use the noiseless point");
    levels.emplace_back(s);
  }
  if (include_noiseless)
    levels.emplace_back(std::nullopt);
  if (levels.empty())
    throw InvalidArgument("SNR sweep needs at least one point");
  CsvSink sink(out);

  const int total = static_cast<int>(levels.size()) * trials;
  const std::vector<TrialRecord> records = parallel_map<TrialRecord>(
      total, workers, [&](int i) {
        TrialSpec spec;
        spec.dims = dims;
        spec.seed = trial_seed(base_seed, dims, i % trials);
        spec.snr_db = levels[static_cast<std::size_t>(i / trials)];
        return run_trial(spec, opts);
      });

  std::vector<SnrPoint> points;
  for (std::size_t p = 0; p < levels.size(); ++p) {
    SnrPoint pt;
    pt.snr_db = levels[p];
    pt.trials = trials;
    std::vector<double> logs;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      const TrialRecord &r = records[p * static_cast<std::size_t>(trials) + t];
      pt.successes += r.success ? 1 : 0;
      pt.max_increase = std::max(pt.max_increase, r.max_increase);
      sum += r.rel_error;
      logs.push_back(std::log10(r.rel_error));
    }
    double mean_log = 0.0;
    for (double l : logs)
      mean_log += l;
    mean_log /= trials;
    double var = 0.0;
    for (double l : logs)
      var += (l - mean_log) * (l - mean_log);
    pt.mean_rel_err = std::pow(10.0, mean_log);
    pt.std_log10 = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;
    pt.arith_mean = sum / trials;
    points.push_back(pt);
  }

  if (sink.active()) {
    std::ostream &os = sink.stream();
    os << "snr_db,mean_rel_err,std,arith_mean_rel_err,successes,trials,L,Q,M,K,N,"
          "threshold,base_seed\n";
    for (const SnrPoint &p : points)
      os << format_snr(p.snr_db) << ',' << p.mean_rel_err << ',' << p.std_log10 << ','
         << p.arith_mean << ',' << p.successes << ',' << p.trials << ',' << dims.L
         << ',' << dims.Q << ',' << dims.M << ',' << dims.K << ',' << dims.N << ','
         << opts.threshold << ',' << base_seed << '\n';
    sink.finish();
  }
  return points;
}

// ---------------------------------------------------------------------------

void ScalingOptions::validate() const {
  if (n_max < 1)
    throw InvalidArgument("n_max must be at least 1");
  if (K < 1 || M < 1)
    throw InvalidArgument("K and M must be positive");
  if (l_step < 1 || l_max < std::max(K, M))
    throw InvalidArgument("L grid must reach max(K, M)");
  if (trials < 1)
    throw InvalidArgument("trials must be at least 1");
  if (!(required > 0.0) || required > 1.0)
    throw InvalidArgument("required success fraction must be in (0, 1]");
}

std::vector<ScalingRow>
run_transmitter_sweep(const ScalingOptions &scaling, const TrialOptions &opts,
                      int workers, const std::optional<std::filesystem::path> &out) {
  scaling.validate();
  opts.validate();
  require_workers(workers);
  CsvSink sink(out);

  std::vector<ScalingRow> rows;
  for (int n = 1; n <= scaling.n_max; ++n) {
    ScalingRow row;
    row.N = n;
    std::map<int, bool> cache;
    auto passes = [&](int j) {
      if (auto it = cache.find(j); it != cache.end())
        return it->second;
      const int L = j * scaling.l_step;
      const Dimensions dims{L, L, scaling.M, scaling.K, n};
      const std::vector<TrialRecord> recs = parallel_map<TrialRecord>(
          scaling.trials, workers, [&](int t) {
            TrialSpec spec;
            spec.dims = dims;
            spec.seed = trial_seed(scaling.base_seed, dims, t);
            return run_trial(spec, opts);
          });
      int ok = 0;
      for (const TrialRecord &r : recs)
        ok += r.success ? 1 : 0;
      const bool pass = ok >= scaling.required * scaling.trials - 1e-9;
      ++row.evaluations;
      cache.emplace(j, pass);
      return pass;
    };
    const int lowest = (std::max(scaling.K, scaling.M) + scaling.l_step - 1) / scaling.l_step;
    const int highest = scaling.l_max / scaling.l_step;
    if (lowest <= highest && passes(highest)) {
      int lo = lowest - 1; // treated as failing
      int hi = highest;
      while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (passes(mid))
          hi = mid;
        else
          lo = mid;
      }
      row.l_min = hi * scaling.l_step;
    }
    rows.push_back(row);
  }

  if (sink.active()) {
    std::ostream &os = sink.stream();
    os << "N,L_min,K,M,trials,required,threshold,evaluations,base_seed\n";
    for (const ScalingRow &r : rows) {
      os << r.N << ',';
      if (r.l_min)
        os << *r.l_min;
      else
        os << "NA";
      os << ',' << scaling.K << ',' << scaling.M << ',' << scaling.trials << ','
         << scaling.required << ',' << opts.threshold << ',' << r.evaluations << ','
         << scaling.base_seed << '\n';
    }
    sink.finish();
  }
  return rows;
}

LinearFit fit_line(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("fit_line needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw DegenerateInput("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// ---------------------------------------------------------------------------

SolveResult run_convergence_trace(const TrialSpec &spec, const TrialOptions &opts,
                                  const std::optional<std::filesystem::path> &out) {
  opts.validate();
  spec.dims.validate();
  CsvSink sink(out);
  const Instance inst = synthesize(spec);
  const SolverConfig cfg = trial_config(inst, spec, opts);
  SolveResult res = solve(inst.ensemble, inst.observation, cfg, inst.truth);
  if (sink.active()) {
    std::ostream &os = sink.stream();
    const Dimensions &d = spec.dims;
    os << "t,f_tilde,f,g,rel_err,grad_norm,eta,L,Q,M,K,N,seed,snr_db\n";
    for (const TraceRow &r : res.trace.rows)
      os << r.t << ',' << r.f_tilde << ',' << r.f << ',' << r.g << ',' << r.rel_err
         << ',' << r.grad_norm << ',' << r.eta << ',' << d.L << ',' << d.Q << ','
         << d.M << ',' << d.K << ',' << d.N << ',' << spec.seed << ','
         << format_snr(spec.snr_db) << '\n';
    sink.finish();
  }
  return res;
}

// ---------------------------------------------------------------------------

ProbeKind parse_probe_kind(const std::string &name) {
  if (name == "adjoint")
    return ProbeKind::Adjoint;
  if (name == "isometry")
    return ProbeKind::Isometry;
  if (name == "rip")
    return ProbeKind::Rip;
  if (name == "gradcheck")
    return ProbeKind::Gradcheck;
  throw InvalidArgument("unknown probe kind '" + name +
                        "' (expected adjoint, isometry, rip or gradcheck)");
}

std::string to_string(ProbeKind kind) {
  switch (kind) {
  case ProbeKind::Adjoint:
    return "adjoint";
  case ProbeKind::Isometry:
    return "isometry";
  case ProbeKind::Rip:
    return "rip";
  case ProbeKind::Gradcheck:
    return "gradcheck";
  }
  return "unknown";
}

namespace {

// Sum over components of the Frobenius inner product <A, B> = sum A_ij conj(B_ij).
cplx frobenius(const std::vector<CMatrix> &a, const std::vector<CMatrix> &b) {
  cplx acc(0.0, 0.0);
  for (std::size_t n = 0; n < a.size(); ++n)
    acc += (b[n].conjugate().cwiseProduct(a[n])).sum();
  return acc;
}

double frobenius_sq(const std::vector<CMatrix> &a) {
  double acc = 0.0;
  for (const CMatrix &m : a)
    acc += m.squaredNorm();
  return acc;
}

std::vector<CMatrix> lifted(const BlockFactorPair &z) {
  std::vector<CMatrix> out;
  for (std::size_t n = 0; n < z.channels.size(); ++n)
    out.push_back(z.channels[n] * z.coefficients[n].adjoint());
  return out;
}

// Lifted difference Z - Z0 with Z a 30% perturbation of the truth.
std::vector<CMatrix> local_difference(const Dimensions &d, std::uint64_t seed) {
  TrialSpec spec;
  spec.dims = d;
  spec.seed = seed;
  const BlockFactorPair truth = make_ground_truth(spec);
  std::mt19937_64 rng(derive_seed(seed, 0x70726f6265ULL, 0));
  BlockFactorPair near = truth;
  for (int n = 0; n < d.N; ++n) {
    CVector dh = random_complex(rng, d.M);
    CVector dx = random_complex(rng, d.K);
    near.channels[n] += 0.3 * truth.channels[n].norm() / dh.norm() * dh;
    near.coefficients[n] += 0.3 * truth.coefficients[n].norm() / dx.norm() * dx;
  }
  std::vector<CMatrix> diff = lifted(near);
  const std::vector<CMatrix> base = lifted(truth);
  for (std::size_t n = 0; n < diff.size(); ++n)
    diff[n] -= base[n];
  return diff;
}

MeasurementEnsemble with_signs(const Dimensions &d, const std::vector<RMatrix> &coding,
                               const std::vector<RVector> &signs) {
  return MeasurementEnsemble(d, signs, coding);
}

ProbeReport probe_adjoint(const ProbeParams &p) {
  ProbeReport rep;
  rep.statistic = "max_relative_mismatch";
  const Dimensions &d = p.dims;
  for (int i = 0; i < p.draws; ++i) {
    const std::uint64_t seed = derive_seed(p.seed, 0xad1, static_cast<std::uint64_t>(i));
    const MeasurementEnsemble ens = default_ensemble(d, seed);
    std::mt19937_64 rng(seed);
    std::vector<CMatrix> z;
    for (int n = 0; n < d.N; ++n) {
      CMatrix block(d.M, d.K);
      for (int k = 0; k < d.K; ++k)
        block.col(k) = random_complex(rng, d.M);
      z.push_back(block);
    }
    const CVector w = random_complex(rng, d.L);
    const CVector az = forward_map_lifted(ens, z);
    const cplx lhs = w.dot(az); // <A(Z), w>
    const cplx rhs = frobenius(z, adjoint_map(ens, w));
    const double scale = az.norm() * w.norm();
    rep.value = std::max(rep.value, std::abs(lhs - rhs) / scale);
    ++rep.samples;
  }
  return rep;
}

ProbeReport probe_isometry(const ProbeParams &p) {
  const Dimensions &d = p.dims;
  const long bits = static_cast<long>(d.Q) * d.N;
  if (bits > kMaxExhaustiveSigns)
    throw InvalidArgument("isometry probe enumerates 2^(Q N) sign patterns; Q N = " +
                          std::to_string(bits) + " exceeds " +
                          std::to_string(kMaxExhaustiveSigns) +
                          ". Use a smaller Q or N, or the rip probe.");
  ProbeReport rep;
  rep.statistic = "mean_ratio";
  std::vector<RMatrix> coding;
  for (int n = 0; n < d.N; ++n)
    coding.push_back(make_coding_matrix(d.Q, d.K, n, d.N));
  const std::vector<CMatrix> diff = local_difference(d, p.seed);
  const double denom = frobenius_sq(diff);
  const long patterns = 1L << bits;
  std::vector<RVector> signs(static_cast<std::size_t>(d.N), RVector(d.Q));
  double sum = 0.0;
  for (long mask = 0; mask < patterns; ++mask) {
    for (int n = 0; n < d.N; ++n)
      for (int q = 0; q < d.Q; ++q)
        signs[static_cast<std::size_t>(n)][q] = (mask >> (n * d.Q + q)) & 1L ? -1.0 : 1.0;
    const MeasurementEnsemble ens = with_signs(d, coding, signs);
    sum += forward_map_lifted(ens, diff).squaredNorm();
  }
  rep.samples = static_cast<int>(patterns);
  rep.value = sum / static_cast<double>(patterns) / denom;
  return rep;
}

ProbeReport probe_rip(const ProbeParams &p) {
  const Dimensions &d = p.dims;
  ProbeReport rep;
  rep.statistic = "mean_ratio";
  std::vector<RMatrix> coding;
  for (int n = 0; n < d.N; ++n)
    coding.push_back(make_coding_matrix(d.Q, d.K, n, d.N));
  const std::vector<CMatrix> diff = local_difference(d, p.seed);
  const double denom = frobenius_sq(diff);
  constexpr int bins = 20;
  rep.bin_counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b)
    rep.bin_edges.push_back(2.0 * b / bins);
  int in_band = 0;
  double sum = 0.0;
  for (int i = 0; i < p.draws; ++i) {
    std::vector<RVector> signs;
    const std::uint64_t seed = derive_seed(p.seed, 0x219, static_cast<std::uint64_t>(i));
    for (int n = 0; n < d.N; ++n)
      signs.push_back(make_modulation(d.Q, n, seed));
    const MeasurementEnsemble ens = with_signs(d, coding, signs);
    const double ratio = forward_map_lifted(ens, diff).squaredNorm() / denom;
    sum += ratio;
    if (ratio >= 0.75 && ratio <= 1.25)
      ++in_band;
    const int b = std::clamp(static_cast<int>(ratio / 2.0 * bins), 0, bins - 1);
    ++rep.bin_counts[static_cast<std::size_t>(b)];
  }
  rep.samples = p.draws;
  rep.value = p.draws > 0 ? sum / p.draws : kNaN;
  rep.fraction_in_band = p.draws > 0 ? static_cast<double>(in_band) / p.draws : 0.0;
  return rep;
}

ProbeReport probe_gradcheck(const ProbeParams &p) {
  const Dimensions &d = p.dims;
  ProbeReport rep;
  rep.statistic = "max_relative_mismatch";
  for (int i = 0; i < p.draws; ++i) {
    const std::uint64_t seed = derive_seed(p.seed, 0x9c, static_cast<std::uint64_t>(i));
    TrialSpec spec;
    spec.dims = d;
    spec.seed = seed;
    const Instance inst = synthesize(spec);
    std::mt19937_64 rng(seed);
    BlockFactorPair z;
    BlockFactorPair delta;
    for (int n = 0; n < d.N; ++n) {
      z.channels.push_back(random_complex(rng, d.M));
      z.coefficients.push_back(random_complex(rng, d.K));
      delta.channels.push_back(random_complex(rng, d.M));
      delta.coefficients.push_back(random_complex(rng, d.K));
    }
    // small d_n and unit coherence bounds put many hinges in their active range
    PenaltyParams pen;
    pen.d_n.assign(static_cast<std::size_t>(d.N), 0.5);
    pen.d = std::sqrt(0.25 * d.N);
    pen.rho = 1.0;
    pen.mu = 1.0;
    pen.nu = 1.0;
    const ObjectiveEval ev = objective_with_gradient(inst.ensemble, z, inst.observation, pen);
    const double step = 1e-6 * std::sqrt(squared_norm(z) / squared_norm(delta));
    BlockFactorPair plus = z;
    plus += cplx(step, 0.0) * delta;
    BlockFactorPair minus = z;
    minus -= cplx(step, 0.0) * delta;
    const double fd = (objective(inst.ensemble, plus, inst.observation, pen).total() -
                       objective(inst.ensemble, minus, inst.observation, pen).total()) /
                      (2.0 * step);
    const double analytic = 2.0 * real_inner(ev.gradient, delta);
    const double mismatch =
        std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-300});
    rep.value = std::max(rep.value, mismatch);
    ++rep.samples;
  }
  return rep;
}

} // namespace

ProbeReport run_probe(ProbeKind kind, const ProbeParams &params) {
  params.dims.validate();
  if (params.draws < 1)
    throw InvalidArgument("probe draws must be at least 1");
  ProbeReport rep;
  switch (kind) {
  case ProbeKind::Adjoint:
    rep = probe_adjoint(params);
    break;
  case ProbeKind::Isometry:
    rep = probe_isometry(params);
    break;
  case ProbeKind::Rip:
    rep = probe_rip(params);
    break;
  case ProbeKind::Gradcheck:
    rep = probe_gradcheck(params);
    break;
  }
  rep.kind = kind;
  rep.params = params;
  return rep;
}

std::string probe_report_json(const ProbeReport &report) {
  const Dimensions &d = report.params.dims;
  nlohmann::json doc;
  doc["kind"] = to_string(report.kind);
  doc["dims"] = {{"L", d.L}, {"Q", d.Q}, {"M", d.M}, {"K", d.K}, {"N", d.N}};
  doc["seed"] = std::to_string(report.params.seed);
  doc["draws"] = report.params.draws;
  doc["statistic"] = report.statistic;
  doc["value"] = report.value;
  doc["samples"] = report.samples;
  if (report.kind == ProbeKind::Rip) {
    doc["band"] = {0.75, 1.25};
    doc["fraction_in_band"] = report.fraction_in_band;
    doc["histogram"] = {{"edges", report.bin_edges}, {"counts", report.bin_counts}};
  }
  return doc.dump(2);
}

void write_probe_report(const ProbeReport &report,
                        const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open probe report for writing: " + path.string());
  out << probe_report_json(report) << '\n';
  if (!out)
    throw IoError("failed writing probe report: " + path.string());
}

} // namespace bdd
