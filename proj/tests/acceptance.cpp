// Acceptance harness: one pass/fail line per criterion, nonzero exit when
// any criterion fails.  Each criterion re-derives its own inputs so the
// checks stay independent of the unit suite.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracfour/fourier.hpp"
#include "fracfour/ifs.hpp"
#include "fracfour/measures.hpp"
#include "fracfour/models.hpp"
#include "fracfour/nonconc.hpp"
#include "fracfour/numerics.hpp"
#include "fracfour/symbolic.hpp"
#include "fracfour/thermo.hpp"

#ifndef FRACFOUR_CLI_PATH
#define FRACFOUR_CLI_PATH "./fracfour"
#endif

namespace {

int g_failures = 0;

void report(int criterion, bool pass, double seconds, const std::string& note) {
  std::printf("criterion %2d: %s  (%.2fs)  %s\n", criterion,
              pass ? "PASS" : "FAIL", seconds, note.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <class Fn>
void run(int criterion, Fn fn) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string note;
  try {
    pass = fn(note);
  } catch (const std::exception& e) {
    note = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(criterion, pass, secs, note);
}

ff::GibbsModel affine_cantor_model() {
  ff::MarkovIFS ifs;
  ifs.name = "affine_cantor";
  ifs.ambient = {0.0, 1.0};
  ifs.branches.push_back(
      ff::make_affine_branch(0, 1.0 / 3.0, 0.0, {0.0, 1.0}));
  ifs.branches.push_back(
      ff::make_affine_branch(1, 1.0 / 3.0, 2.0 / 3.0, {0.0, 1.0}));
  ifs.rule = ff::TransitionRule::full_shift(2);
  ifs.alphabet.size = 2;
  ifs.kappa_plus = 1.0 / 3.0;
  ifs.distortion_alpha = 1.0;
  ifs.distortion_C = 0.0;  // affine branches have no distortion
  ifs.validate();
  ff::GibbsModel m;
  m.ifs = ifs;
  m.potential = ff::Potential::locally_constant({0.5, 0.5});
  m.validate();
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

bool criterion1(std::string& note) {
  const ff::LorenzReport r = ff::lorenz_report(1.1, 0.25, -0.5, 0.5);
  const bool pass = std::abs(r.x0 - (-0.07429)) <= 1e-4 &&
                    std::abs(r.d0 - 0.51748) <= 1e-4 &&
                    std::abs(r.x1 - 0.07429) <= 1e-4 &&
                    std::abs(r.d1 - 0.51748) <= 1e-4 &&
                    std::abs(r.product - 0.26779) <= 1e-4 &&
                    std::abs(r.x10 - 0.03259) <= 1e-4 &&
                    std::abs(r.d10 - 0.077825) <= 1e-5 &&
                    std::abs(r.defect - 1.23572) <= 1e-4;
  note = "defect=" + fmt(r.defect) + " d10=" + fmt(r.d10);
  return pass;
}

bool criterion2(std::string& note) {
  double max_gap = 0.0, min_q = 1e300;
  for (int i = 1; i <= 99; ++i) {
    const double t = i / 100.0;
    const double qc = ff::lyons_Q_closed(t);
    const double qf = ff::lyons_Q_fixed_point(t);
    max_gap = std::max(max_gap, std::abs(qc - qf));
    min_q = std::min(min_q, std::abs(qc));
  }
  note = "max_gap=" + fmt(max_gap) + " min|Q|=" + fmt(min_q);
  return max_gap <= 1e-10 && min_q > 0.0;
}

bool criterion3(std::string& note) {
  const ff::GibbsModel m = affine_cantor_model();
  for (int n = 1; n <= 6; ++n) {
    if (ff::qnl_statistic(m, n, -0.5, 0.5) != 1.0) {
      note = "qnl != 1 at n=" + std::to_string(n);
      return false;
    }
    if (ff::qnl_statistic(m, n, -1e-9, 2e-9) != 1.0) {
      note = "qnl != 1 on tiny interval at n=" + std::to_string(n);
      return false;
    }
  }
  const ff::UniCertificate uni =
      ff::uni_margin(m, 2, ff::PairStrategy::exhaustive);
  if (uni.c0 != 0.0) {
    note = "uni c0=" + fmt(uni.c0);
    return false;
  }
  const ff::MnlReport mnl =
      ff::mnl_statistic(m, ff::Word::parse("01"), ff::Word::parse("10"), 0.5,
                        2000, 1);
  note = "qnl=1, c0=0, mnl atom=" + std::string(mnl.diverged ? "yes" : "no");
  return mnl.diverged;
}

bool criterion4(std::string& note) {
  const ff::GibbsModel model = ff::lyons_model(0.5, 6);
  const ff::TreeConstants tc = ff::tree_constants(model, 1.0);
  if (!(tc.uni.found && tc.uni.c0 > 0.0)) {
    note = "no UNI margin";
    return false;
  }
  ff::CounterRng rng{1};
  bool all = true;
  double worst = 0.0;
  int checked = 0;
  for (int i = 0; i < 20; ++i) {
    const double x = rng.uniform(i, 0), y = rng.uniform(i, 1);
    const double z = rng.uniform(i, 2);
    const double t = (2.0 * rng.uniform(i, 3) - 1.0) * 2.0;
    for (double div : {8.0, 40.0, 200.0}) {
      const double sigma = tc.uni.c0 / div;
      for (int n = tc.uni.N; n <= 12; n += 2) {
        const ff::TreeLoss tl =
            ff::tree_loss(model, x, y, z, t, sigma, n, tc);
        all = all && tl.pass;
        worst = std::max(worst, tl.L - tl.bound);
        ++checked;
      }
    }
  }
  note = "c0=" + fmt(tc.uni.c0) + " N=" + std::to_string(tc.uni.N) +
         " cases=" + std::to_string(checked) + " worst(L-bound)=" + fmt(worst);
  return all;
}

bool criterion5(std::string& note) {
  const ff::GibbsModel model = ff::lyons_model(0.5, 6);
  const double lambda = ff::lyapunov(model, 8).value;
  const ff::PressureCurve pcv = ff::pressure_curve(model, 1.0, lambda, 4);
  std::ostringstream n0s;
  for (double t : {-0.1, -0.05, 0.05, 0.1}) {
    if (std::abs(t) > pcv.t_gamma0) {
      note = "t outside the pressure-curvature window";
      return false;
    }
    int n0 = -1;
    for (int n = 5; n <= 15; ++n) {
      const ff::MomentCheck mc =
          ff::moment_check(model, n, t, lambda, pcv.eps_gamma0);
      if (mc.pass && n0 < 0) n0 = n;
      if (n0 >= 0 && !mc.pass) {
        note = "bound lost at n=" + std::to_string(n) + " after n0";
        return false;
      }
    }
    if (n0 < 0) {
      note = "no passing depth for t=" + fmt(t);
      return false;
    }
    n0s << " n0(" << fmt(t) << ")=" << n0;
  }
  note = n0s.str();
  return true;
}

// The converged staircase is shared by criteria 6, 7 and 12.
struct StaircaseState {
  ff::PsiTrace trace;
  ff::StaircaseIFS ifs;
  ff::GibbsModel model;
  bool built = false;
};
StaircaseState g_stairs;

void build_staircase() {
  const int M = 1 << 12;
  g_stairs.trace =
      ff::psi_iterate(ff::frostman_uniform(M), 200, M, 0.05, 0.05);
  g_stairs.ifs = ff::staircase_build(g_stairs.trace.mu_fixed, 0.05, 0.05);
  ff::staircase_delta_root(g_stairs.ifs);
  g_stairs.model = ff::staircase_model(g_stairs.ifs);
  g_stairs.built = true;
}

bool criterion6(std::string& note) {
  build_staircase();
  const ff::PsiTrace& tr = g_stairs.trace;
  if (!tr.converged || tr.residuals.empty() ||
      tr.residuals.back() > 1e-3 || tr.iterations > 200) {
    note = "no convergence in 200 iterations";
    return false;
  }
  const double eps = tr.mu_fixed.eps;
  for (std::size_t i = 0; i < tr.deltas.size(); ++i) {
    if (!(tr.deltas[i] >= 3.0 * eps && tr.deltas[i] < 1.0)) {
      note = "delta out of range at iterate " + std::to_string(i);
      return false;
    }
    if (std::abs(tr.zeta_ds[i] - 1.0) > 1e-10) {
      note = "zeta(delta) off at iterate " + std::to_string(i);
      return false;
    }
    if (std::abs(tr.zeta0s[i] - 2.0) > 1e-12) {
      note = "zeta(0) off at iterate " + std::to_string(i);
      return false;
    }
    if (tr.zeta1s[i] > 0.6) {
      note = "zeta(1) above 0.6 at iterate " + std::to_string(i);
      return false;
    }
  }
  note = "iters=" + std::to_string(tr.iterations) +
         " residual=" + fmt(tr.residuals.back()) +
         " delta=" + fmt(tr.deltas.back());
  return true;
}

bool criterion7(std::string& note) {
  if (!g_stairs.built) build_staircase();
  const int N = 4;
  std::vector<int> la(N, 0), lb(N, 0);
  la[N - 1] = 1;
  const ff::EmpiricalMeasure samp =
      ff::frostman_sample(g_stairs.trace.mu_fixed, 100000, 1);
  const std::vector<double> unit(samp.samples.size(), 1.0);
  const ff::MnlReport mnl = ff::mnl_statistic_weighted(
      g_stairs.model, ff::Word{la}, ff::Word{lb},
      g_stairs.model.ifs.ambient.mid(), samp.samples, unit);
  note = "KS=" + fmt(mnl.ks_to_uniform) + " C_mnl=" + fmt(mnl.C_mnl);
  return !mnl.diverged && mnl.ks_to_uniform <= 0.05;
}

bool criterion8(std::string& note) {
  double worst_gap = 0.0;
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const ff::MPSystem mp = ff::mp_build(alpha, 6);
    ff::GibbsModel model;
    model.ifs = mp.ifs;
    model.potential = ff::Potential::locally_constant(
        std::vector<double>(mp.ifs.size(), 1.0 / mp.ifs.size()));
    model.validate();
    const ff::UniCertificate uni =
        ff::uni_margin(model, 2, ff::PairStrategy::suggested);
    const double gap = std::abs(uni.c0_grid - ff::mp_uni_c0_closed(alpha));
    worst_gap = std::max(worst_gap, gap);
    if (!(uni.c0_grid > 0.0) || gap > 1e-8) {
      note = "alpha=" + fmt(alpha) + " gap=" + fmt(gap);
      return false;
    }
  }
  note = "worst gap=" + fmt(worst_gap);
  return true;
}

bool criterion9(std::string& note) {
  double worst_gap = 0.0, worst_ratio = 0.0;
  for (double gamma : {0.5, 1.0, 2.0, 5.0})
    for (double t : {0.1, 0.5, 0.9}) {
      const double direct = ff::lyons_light_tail_direct(gamma, t, 1000);
      if (!std::isfinite(direct)) {
        note = "divergent at gamma=" + fmt(gamma) + " t=" + fmt(t);
        return false;
      }
      // Tail extrapolation: 200 explicit terms plus a geometric remainder
      // with the local term ratio.
      const int N = 200;
      const double partial = ff::lyons_light_tail_direct(gamma, t, N);
      const double a_N =
          std::pow(2.0, -(N + 1.0)) * std::pow((N + 1.0) * t + 1.0, 2.0 * gamma);
      const double r = ff::lyons_light_tail_ratio(gamma, t, N);
      const double extrapolated = partial + a_N * r / (1.0 - r);
      worst_gap = std::max(worst_gap, std::abs(direct - extrapolated));
      const double ratio_inf = ff::lyons_light_tail_ratio(gamma, t, 100000000LL);
      worst_ratio = std::max(worst_ratio, std::abs(ratio_inf - 0.5));
    }
  note = "worst |direct-extrapolated|=" + fmt(worst_gap) +
         " worst |ratio-1/2|=" + fmt(worst_ratio);
  return worst_gap <= 1e-8 && worst_ratio <= 1e-6;
}

bool criterion10(std::string& note) {
  // Uniform law on [0, 1], midpoint discretization: beta should fit 1.
  ff::EmpiricalMeasure mu;
  const int n = 1000000;
  mu.samples.resize(n);
  for (int i = 0; i < n; ++i) mu.samples[i] = (i + 0.5) / n;
  const ff::DecayReport dr = ff::decay_profile(
      mu, [](double) { return 1.0; }, [](double x) { return x; }, 16.0,
      1048576.0, 8, 4);
  if (std::abs(dr.beta - 1.0) > 0.1) {
    note = "uniform beta=" + fmt(dr.beta);
    return false;
  }
  // Middle-thirds Cantor measure at xi = 2 pi 3^m: no decay in quadrature.
  const ff::GibbsModel cantor = affine_cantor_model();
  const ff::CylinderMeasure cm = ff::cylinder_measure(cantor, 18);
  const double two_pi = 2.0 * std::acos(-1.0);
  double lo = 1e300, hi = 0.0;
  for (int m = 0; m <= 5; ++m) {
    const ff::OscillatoryValue v = ff::oscillatory_integral_cylinder(
        cm, cantor.ifs, [](double) { return 1.0; },
        [](double x) { return x; }, two_pi * std::pow(3.0, m));
    lo = std::min(lo, v.magnitude);
    hi = std::max(hi, v.magnitude);
  }
  note = "beta=" + fmt(dr.beta) + " cantor spread=" + fmt(hi - lo);
  return hi - lo <= 1e-10;
}

bool criterion11(std::string& note) {
  const ff::GibbsModel model = ff::lyons_model(0.5, 6);
  const ff::EmpiricalMeasure mu = ff::sample(model, 1000000, 24, 1, 4);
  const ff::DecayReport dr = ff::decay_profile(
      mu, [](double) { return 1.0; }, [](double x) { return x; }, 16.0,
      1048576.0, 8, 4);
  note = "beta=" + fmt(dr.beta) + " lo95=" + fmt(dr.beta_lo95);
  return dr.beta > 0.05 && dr.beta_lo95 > 0.0;
}

bool criterion12(std::string& note) {
  if (!g_stairs.built) build_staircase();
  const ff::QnlFit lyons = ff::qnl_fit(ff::lyons_sub_model(0.5), {2, 3, 4, 5},
                                       {0.2, 0.05, 0.0125, 0.003125});
  const ff::QnlFit stairs =
      ff::qnl_fit(g_stairs.model, {2, 3, 4}, {0.2, 0.05, 0.0125});
  note = "lyons (Theta=" + fmt(lyons.Theta) + ", rho=" + fmt(lyons.rho) +
         ", holdout=" + fmt(lyons.holdout_rel_err) + "); staircase (Theta=" +
         fmt(stairs.Theta) + ", rho=" + fmt(stairs.rho) +
         ", holdout=" + fmt(stairs.holdout_rel_err) + ")";
  auto ok = [](const ff::QnlFit& f) {
    return f.Theta > 0.0 && f.Theta < 1.0 && f.rho > 0.0 && f.rho < 1.0 &&
           f.holdout_rel_err <= 0.25 && !f.violation;
  };
  return ok(lyons) && ok(stairs);
}

bool criterion13(std::string& note) {
  namespace fsys = std::filesystem;
  const std::string base = "acceptance_determinism";
  std::error_code ec;
  fsys::remove_all(base, ec);
  struct Cmd {
    std::string args;
    std::string file;
  };
  const std::vector<Cmd> cmds = {
      {"lorenz", "lorenz_report.json"},
      {"staircase --M 512 --iters 60", "staircase_report.json"},
      {"qnl --builtin lyons_sub", "qnl_report.json"},
  };
  for (const Cmd& cmd : cmds) {
    std::vector<nlohmann::json> reports;
    std::vector<std::string> raw;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string dir = base + "/run" + std::to_string(rep);
      fsys::create_directories(dir);
      const std::string shell = std::string(FRACFOUR_CLI_PATH) + " " +
                                cmd.args + " --seed 7 --workers 2 " +
                                "--output-dir " + dir + " > /dev/null 2>&1";
      if (std::system(shell.c_str()) != 0) {
        note = "command failed: `" + cmd.args + "`";
        return false;
      }
      std::ifstream in(dir + "/" + cmd.file);
      std::stringstream buf;
      buf << in.rdbuf();
      raw.push_back(buf.str());
      if (raw.back().empty()) {
        note = "no report for `" + cmd.args + "`";
        return false;
      }
      nlohmann::json j = nlohmann::json::parse(raw.back());
      j.erase("metadata");
      reports.push_back(std::move(j));
    }
    if (reports[0].dump() != reports[1].dump()) {
      note = "mismatch for `" + cmd.args + "`";
      return false;
    }
  }
  fsys::remove_all(base, ec);
  note = std::to_string(cmds.size()) + " commands byte-stable";
  return true;
}

}  // namespace

int main() {
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  run(10, criterion10);
  run(11, criterion11);
  run(12, criterion12);
  run(13, criterion13);
  std::printf("%s: %d/13 criteria passed\n",
              g_failures == 0 ? "OK" : "FAILURES", 13 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
