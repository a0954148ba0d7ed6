#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bdd/errors.hpp"
#include "bdd/harness.hpp"
#include "bdd/snapshot.hpp"

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kIo = 2, kNumerical = 3 };

struct Common {
  int L = 320;
  int Q = 320;
  int M = 8;
  int K = 8;
  int N = 2;
  std::optional<double> snr_db;
  std::uint64_t seed = 1;
  int trials = 10;
  double threshold = 1e-2;
  int max_iters = 5000;
  std::optional<double> eta;
  std::optional<double> rho;
  bool oracle_coherence = false;
  std::optional<double> mu;
  std::optional<double> nu;
  std::optional<std::string> out;
  bool paper_scale = false;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::string> dump_instance;
};

void add_common(CLI::App &app, Common &c) {
  app.add_option("--L", c.L, "number of observations")->capture_default_str();
  app.add_option("--Q", c.Q, "modulated signal length")->capture_default_str();
  app.add_option("--M", c.M, "channel taps")->capture_default_str();
  app.add_option("--K", c.K, "message length")->capture_default_str();
  app.add_option("--N", c.N, "number of components")->capture_default_str();
  app.add_option("--snr-db", c.snr_db, "noise level in dB (omit for noiseless)");
  app.add_option("--seed", c.seed, "base seed")->capture_default_str();
  app.add_option("--trials", c.trials, "trials per cell or point")->capture_default_str();
  app.add_option("--threshold", c.threshold, "success threshold on relative error")
      ->capture_default_str();
  app.add_option("--max-iters", c.max_iters, "iteration cap")->capture_default_str();
  app.add_option("--eta", c.eta, "fixed step size (default: backtracking)");
  app.add_option("--rho", c.rho, "penalty weight (default: d^2 + 2 ||e||^2)");
  app.add_flag("--oracle-coherence", c.oracle_coherence,
               "take mu and nu from the ground truth");
  app.add_option("--mu", c.mu, "spectral coherence bound (with --nu)");
  app.add_option("--nu", c.nu, "coded coherence bound (with --mu)");
  app.add_option("--out", c.out, "output path (CSV, or JSON for probe)");
  app.add_flag("--paper-scale", c.paper_scale, "use the L = 3200 grid (phase, scaling)");
  app.add_option("--workers", c.workers, "worker threads")->capture_default_str();
  app.add_option("--dump-instance", c.dump_instance,
                 "write the instance snapshot JSON (trial, trace)");
}

bdd::TrialOptions trial_options(const Common &c) {
  bdd::TrialOptions o;
  o.threshold = c.threshold;
  o.solver.max_iters = c.max_iters;
  if (c.eta) {
    o.solver.step_mode = bdd::StepMode::Fixed;
    o.solver.eta = *c.eta;
  }
  o.solver.rho = c.rho;
  if (c.mu.has_value() != c.nu.has_value())
    throw bdd::InvalidArgument("--mu and --nu must be given together");
  if (c.oracle_coherence && c.mu)
    throw bdd::InvalidArgument("--oracle-coherence excludes --mu/--nu");
  if (c.oracle_coherence) {
    o.coherence = bdd::CoherenceMode::Oracle;
  } else if (c.mu) {
    o.coherence = bdd::CoherenceMode::Fixed;
    o.solver.coherence = {*c.mu, *c.nu};
  } else {
    o.coherence = bdd::CoherenceMode::Estimated;
  }
  o.validate();
  return o;
}

bdd::TrialSpec trial_spec(const Common &c) {
  bdd::TrialSpec s;
  s.dims = bdd::Dimensions{c.L, c.Q, c.M, c.K, c.N};
  s.dims.validate();
  s.seed = c.seed;
  s.snr_db = c.snr_db;
  return s;
}

std::optional<std::filesystem::path> out_path(const Common &c) {
  if (!c.out)
    return std::nullopt;
  return std::filesystem::path(*c.out);
}

// Fails early on an unwritable path, before any computation.
void ensure_writable(const std::optional<std::string> &path) {
  if (!path)
    return;
  std::ofstream probe(*path, std::ios::out | std::ios::app);
  if (!probe)
    throw bdd::IoError("cannot open output for writing: " + *path);
}

void reject_paper_scale(const Common &c, const std::string &cmd) {
  if (c.paper_scale)
    throw bdd::InvalidArgument("--paper-scale applies to phase and scaling, not " + cmd);
}

void dump_if_requested(const Common &c, const bdd::TrialSpec &spec) {
  if (c.dump_instance)
    bdd::save_snapshot(*c.dump_instance, spec, bdd::synthesize(spec));
}

int cmd_trial(const Common &c) {
  reject_paper_scale(c, "trial");
  ensure_writable(c.out);
  ensure_writable(c.dump_instance);
  const bdd::TrialSpec spec = trial_spec(c);
  const bdd::TrialOptions opts = trial_options(c);
  dump_if_requested(c, spec);
  const bdd::TrialRecord r = bdd::run_trial(spec, opts);
  std::ostringstream row;
  row.imbue(std::locale::classic());
  row << std::setprecision(17) << spec.dims.L << ',' << spec.dims.Q << ','
      << spec.dims.M << ',' << spec.dims.K << ',' << spec.dims.N << ',' << r.seed << ','
      << (r.snr_db ? std::to_string(*r.snr_db) : std::string("inf")) << ','
      << r.iterations << ',' << r.rel_error << ',' << r.init_error << ','
      << (r.success ? 1 : 0) << ',' << r.stop_reason << ',' << opts.threshold << '\n';
  const std::string header =
      "L,Q,M,K,N,seed,snr_db,iterations,rel_error,init_error,success,stop_reason,threshold\n";
  if (c.out) {
    std::ofstream f(*c.out);
    f << header << row.str();
    if (!f)
      throw bdd::IoError("failed writing " + *c.out);
  }
  std::cout << header << row.str();
  std::cerr << "wall time " << r.wall_seconds << " s\n";
  return kOk;
}

int cmd_phase(const Common &c, const std::vector<int> &ks, const std::vector<int> &ms,
              const std::vector<int> &qs) {
  bdd::SweepGrid grid = c.paper_scale ? bdd::paper_phase_grid() : bdd::desk_phase_grid();
  if (!ks.empty())
    grid.K = ks;
  if (!ms.empty())
    grid.M = ms;
  if (!qs.empty())
    grid.Q = qs;
  if (!c.paper_scale)
    grid.L = c.L;
  grid.N = c.N;
  grid.trials = c.trials;
  grid.base_seed = c.seed;
  const auto cells = bdd::run_phase_transition(grid, trial_options(c), c.workers, out_path(c));
  const bdd::MonotonicitySummary mono = bdd::q_monotonicity(cells);
  std::cout << "cells " << cells.size() << ", (K,M) pairs monotone in Q: " << mono.monotone
            << "/" << mono.pairs << " (" << mono.fraction() << ")\n";
  return kOk;
}

int cmd_snr(const Common &c, const std::vector<double> &snrs, bool noiseless) {
  reject_paper_scale(c, "snr");
  const bdd::Dimensions dims{c.L, c.Q, c.M, c.K, c.N};
  const auto points = bdd::run_snr_sweep(dims, snrs, noiseless, c.trials, c.seed,
                                         trial_options(c), c.workers, out_path(c));
  std::cout << "snr_db,mean_rel_err,std\n";
  for (const auto &p : points)
    std::cout << (p.snr_db ? std::to_string(*p.snr_db) : std::string("inf")) << ','
              << p.mean_rel_err << ',' << p.std_log10 << '\n';
  return kOk;
}

int cmd_scaling(const Common &c, bdd::ScalingOptions s) {
  s.K = c.K;
  s.M = c.M;
  s.trials = c.trials;
  s.base_seed = c.seed;
  if (c.paper_scale)
    s.l_max = std::max(s.l_max, 3200);
  const auto rows = bdd::run_transmitter_sweep(s, trial_options(c), c.workers, out_path(c));
  std::vector<double> xs;
  std::vector<double> ys;
  std::cout << "N,L_min\n";
  for (const auto &r : rows) {
    std::cout << r.N << ',' << (r.l_min ? std::to_string(*r.l_min) : std::string("NA"))
              << '\n';
    if (r.l_min) {
      xs.push_back(r.N);
      ys.push_back(*r.l_min);
    }
  }
  if (xs.size() >= 2) {
    const bdd::LinearFit f = bdd::fit_line(xs, ys);
    std::cout << "fit: slope " << f.slope << ", R^2 " << f.r_squared << '\n';
  }
  return kOk;
}

int cmd_trace(const Common &c) {
  reject_paper_scale(c, "trace");
  ensure_writable(c.dump_instance);
  const bdd::TrialSpec spec = trial_spec(c);
  const bdd::TrialOptions opts = trial_options(c);
  if (c.out)
    ensure_writable(c.out);
  dump_if_requested(c, spec);
  const bdd::SolveResult res = bdd::run_convergence_trace(spec, opts, out_path(c));
  const auto &last = res.trace.rows.back();
  std::cout << "iterations " << res.iterations << ", stop " << bdd::to_string(res.reason)
            << ", final F~ " << last.f_tilde << ", relative error " << last.rel_err
            << '\n';
  return kOk;
}

int cmd_probe(const Common &c, const std::string &kind, int draws) {
  reject_paper_scale(c, "probe");
  ensure_writable(c.out);
  bdd::ProbeParams p;
  p.dims = bdd::Dimensions{c.L, c.Q, c.M, c.K, c.N};
  p.seed = c.seed;
  p.draws = draws;
  const bdd::ProbeReport rep = bdd::run_probe(bdd::parse_probe_kind(kind), p);
  if (c.out)
    bdd::write_probe_report(rep, *c.out);
  std::cout << bdd::probe_report_json(rep) << '\n';
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Blind deconvolution and demixing: solver and experiment harness"};
  app.require_subcommand(1);
  Common c;

  auto *trial = app.add_subcommand("trial", "run one synthetic recovery trial");
  add_common(*trial, c);

  auto *phase = app.add_subcommand("phase", "phase transition over (K, M, Q)");
  add_common(*phase, c);
  std::vector<int> ks;
  std::vector<int> ms;
  std::vector<int> qs;
  phase->add_option("--k-values", ks, "K axis (comma separated)")->delimiter(',');
  phase->add_option("--m-values", ms, "M axis (comma separated)")->delimiter(',');
  phase->add_option("--q-values", qs, "Q axis (comma separated)")->delimiter(',');

  auto *snr = app.add_subcommand("snr", "relative error against SNR");
  add_common(*snr, c);
  std::vector<double> snrs{10, 20, 30, 40, 50};
  bool skip_noiseless = false;
  snr->add_option("--snr-list", snrs, "SNR points in dB (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  snr->add_flag("--no-noiseless", skip_noiseless, "omit the noiseless point");

  auto *scaling = app.add_subcommand("scaling", "smallest L against the number of components");
  add_common(*scaling, c);
  bdd::ScalingOptions sopts;
  scaling->add_option("--n-max", sopts.n_max, "largest N")->capture_default_str();
  scaling->add_option("--l-step", sopts.l_step, "L grid spacing")->capture_default_str();
  scaling->add_option("--l-max", sopts.l_max, "largest L tried")->capture_default_str();

  auto *trace = app.add_subcommand("trace", "per-iteration convergence trace");
  add_common(*trace, c);

  auto *probe = app.add_subcommand("probe", "numerical identity probes");
  add_common(*probe, c);
  std::string kind = "adjoint";
  int draws = 100;
  probe->add_option("--kind", kind, "adjoint | isometry | rip | gradcheck")
      ->capture_default_str();
  probe->add_option("--draws", draws, "instances or sign draws")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*trial)
      return cmd_trial(c);
    if (*phase)
      return cmd_phase(c, ks, ms, qs);
    if (*snr)
      return cmd_snr(c, snrs, !skip_noiseless);
    if (*scaling)
      return cmd_scaling(c, sopts);
    if (*trace)
      return cmd_trace(c);
    if (*probe)
      return cmd_probe(c, kind, draws);
  } catch (const bdd::IoError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const bdd::NumericalFailure &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const bdd::DegenerateInput &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kInvalid;
}
