// fracfour: command-line toolkit for IFS construction, non-concentration
// certification, and empirical Fourier-decay measurement.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fracfour/fourier.hpp"
#include "fracfour/ifs.hpp"
#include "fracfour/measures.hpp"
#include "fracfour/models.hpp"
#include "fracfour/nonconc.hpp"
#include "fracfour/numerics.hpp"
#include "fracfour/sumproduct.hpp"
#include "fracfour/thermo.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCertification = 2;
constexpr int kExitBudget = 3;

struct Common {
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t budget = ff::kDefaultWordBudget;
  std::string out_dir;
  std::string config_path;
  bool svg = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "random seed (recorded in reports)");
  cmd->add_option("--workers", c.workers,
                  "worker threads (0 = hardware default)");
  cmd->add_option("--budget", c.budget, "word-enumeration budget");
  cmd->add_option("--output-dir", c.out_dir,
                  "output directory (default $FRACFOUR_OUT or .)");
  cmd->add_option("--config", c.config_path,
                  "JSON config file; its keys override flags");
  cmd->add_flag("--svg", c.svg, "also emit SVG plots");
}

void apply_config(Common& c, json* sub_config, const std::string& sub) {
  if (c.out_dir.empty()) {
    const char* env = std::getenv("FRACFOUR_OUT");
    c.out_dir = env ? env : ".";
  }
  if (c.workers <= 0) c.workers = ff::default_workers();
  if (c.config_path.empty()) return;
  std::ifstream in(c.config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot open config file");
  json cfg = json::parse(in);
  if (cfg.contains("seed")) c.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("workers")) c.workers = cfg["workers"].get<int>();
  if (cfg.contains("budget")) c.budget = cfg["budget"].get<std::uint64_t>();
  if (cfg.contains("output_dir")) c.out_dir = cfg["output_dir"];
  if (sub_config && cfg.contains(sub)) *sub_config = cfg[sub];
}

// FNV-1a content hash for provenance records.
std::string content_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Reports carry schema, provenance, and results; the timestamp lives in a
// separate metadata object so byte-determinism can be checked without it.
void emit_report(const Common& c, const std::string& name, json results,
                 json provenance) {
  provenance["seed"] = c.seed;
  provenance["workers"] = c.workers;
  provenance["budget"] = c.budget;
  json rep;
  rep["schema"] = 1;
  rep["provenance"] = provenance;
  rep["results"] = std::move(results);
  rep["metadata"] = {
      {"timestamp",
       std::chrono::duration_cast<std::chrono::milliseconds>(
           std::chrono::system_clock::now().time_since_epoch())
           .count()}};
  const fs::path path = fs::path(c.out_dir) / (name + ".json");
  write_text(path, rep.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

json decay_json(const ff::DecayReport& r) {
  return {{"beta", r.beta},
          {"beta_stderr", r.beta_stderr},
          {"beta_lo95", r.beta_lo95},
          {"residual", r.residual},
          {"decay_failure", r.decay_failure},
          {"method", r.method},
          {"grid_points", r.xi_grid.size()},
          {"windows", r.window_sups.size()}};
}

ff::MarkovIFS affine_cantor_ifs() {
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
  ifs.distortion_C = 0.0;
  ifs.validate();
  return ifs;
}

ff::GibbsModel affine_cantor_model() {
  ff::GibbsModel m;
  m.ifs = affine_cantor_ifs();
  m.potential = ff::Potential::locally_constant({0.5, 0.5});
  m.validate();
  return m;
}

ff::GibbsModel staircase_converged(int M, int iters, double kappa,
                                   double kappa0, ff::StaircaseIFS* out_s) {
  const ff::PsiTrace tr =
      ff::psi_iterate(ff::frostman_uniform(M), iters, M, kappa, kappa0);
  ff::StaircaseIFS s = ff::staircase_build(tr.mu_fixed, kappa, kappa0);
  ff::staircase_delta_root(s);
  if (out_s) *out_s = s;
  return ff::staircase_model(s);
}

// Builtin model names accepted by qnl / fourier / tree-style subcommands.
ff::GibbsModel builtin_model(const std::string& name) {
  if (name == "lyons") return ff::lyons_model(0.5, 6);
  if (name == "lyons_sub") return ff::lyons_sub_model(0.5);
  if (name == "affine" || name == "affine_cantor") return affine_cantor_model();
  if (name == "staircase")
    return staircase_converged(1 << 10, 50, 0.05, 0.05, nullptr);
  throw CLI::ValidationError("--builtin", "unknown builtin model " + name);
}

ff::GibbsModel load_model(const std::string& path, const std::string& builtin,
                          std::string* hash) {
  if (!builtin.empty()) {
    if (hash) *hash = content_hash("builtin:" + builtin);
    return builtin_model(builtin);
  }
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--model", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (hash) *hash = content_hash(ss.str());
  json j = json::parse(ss.str());
  ff::GibbsModel m;
  m.ifs = ff::MarkovIFS::from_json(j.at("ifs"));
  const json& pot = j.at("potential");
  if (pot.at("kind") == "locally_constant")
    m.potential = ff::Potential::locally_constant(
        pot.at("masses").get<std::vector<double>>());
  else if (pot.at("kind") == "geometric")
    m.potential = ff::Potential::geometric(pot.at("delta").get<double>());
  else
    throw CLI::ValidationError("--model", "unknown potential kind");
  if (j.contains("gibbs_constant")) m.gibbs_constant = j["gibbs_constant"];
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------

int run_lorenz(const Common& c, double a, double alpha, double b0, double b1) {
  const ff::LorenzReport r = ff::lorenz_report(a, alpha, b0, b1);
  json results = {{"a", a},        {"alpha", alpha}, {"b0", b0},
                  {"b1", b1},      {"x0", r.x0},     {"d0", r.d0},
                  {"x1", r.x1},    {"d1", r.d1},     {"product", r.product},
                  {"x10", r.x10},  {"d10", r.d10},   {"defect", r.defect}};
  emit_report(c, "lorenz_report", results, {{"model", "lorenz"}});
  std::cout << "defect = " << r.defect << "\n";
  return kExitOk;
}

int run_lyons(const Common& c, double t, int letters, int decay_samples) {
  json results;
  const ff::LyonsFixedPoints fp = ff::lyons_fixed_points(t);
  results["fixed_points"] = {{"x0", fp.x0}, {"x1", fp.x1}, {"x10", fp.x10}};
  results["Q_closed"] = ff::lyons_Q_closed(t);
  results["Q_fixed_point"] = ff::lyons_Q_fixed_point(t);
  const double q_gap =
      std::abs(ff::lyons_Q_closed(t) - ff::lyons_Q_fixed_point(t));
  double min_absQ = 1e300, max_gap = 0.0;
  std::ostringstream csv;
  csv << "t,Q_closed,Q_fixed_point\n";
  for (int i = 1; i <= 99; ++i) {
    const double ti = i / 100.0;
    const double qc = ff::lyons_Q_closed(ti), qf = ff::lyons_Q_fixed_point(ti);
    min_absQ = std::min(min_absQ, std::abs(qc));
    max_gap = std::max(max_gap, std::abs(qc - qf));
    csv << ti << ',' << qc << ',' << qf << '\n';
  }
  results["Q_grid"] = {{"min_abs_Q", min_absQ}, {"max_route_gap", max_gap}};
  json tail = json::array();
  for (double g : {0.5, 1.0, 2.0, 5.0})
    for (double tt : {0.1, 0.5, 0.9})
      tail.push_back({{"gamma", g},
                      {"t", tt},
                      {"value", ff::lyons_light_tail_direct(g, tt, 1000)}});
  results["light_tail"] = tail;
  results["light_tail_ratio_limit"] =
      ff::lyons_light_tail_ratio(1.0, t, 100000000LL);

  const ff::GibbsModel sub = ff::lyons_sub_model(t);
  const ff::UniCertificate uni =
      ff::uni_margin(sub, 2, ff::PairStrategy::suggested);
  results["uni"] = {{"c0", uni.c0}, {"c0_grid", uni.c0_grid}, {"N", uni.N},
                    {"found", uni.found}};

  bool certified = q_gap <= 1e-10 && min_absQ > 0.0 && max_gap <= 1e-10 &&
                   uni.found && uni.c0 > 0.0;
  if (decay_samples > 0) {
    const ff::GibbsModel model = ff::lyons_model(t, letters);
    const ff::EmpiricalMeasure mu =
        ff::sample(model, decay_samples, 48, c.seed, c.workers);
    const ff::DecayReport dr = ff::decay_profile(
        mu, [](double) { return 1.0; }, [](double x) { return x; }, 16.0,
        1048576.0, 8, c.workers);
    results["decay"] = decay_json(dr);
    certified = certified && dr.beta > 0.05 && dr.beta_lo95 > 0.0;
    if (c.svg)
      write_text(fs::path(c.out_dir) / "lyons_decay.svg", ff::decay_svg(dr));
    write_text(fs::path(c.out_dir) / "lyons_decay.csv", ff::decay_csv(dr));
  }
  results["certified"] = certified;
  write_text(fs::path(c.out_dir) / "lyons_Q.csv", csv.str());
  emit_report(c, "lyons_report", results,
              {{"model", "lyons"}, {"t", t}, {"letters", letters}});
  return certified ? kExitOk : kExitCertification;
}

int run_mp(const Common& c, double alpha, int max_return) {
  const ff::MPSystem mp = ff::mp_build(alpha, max_return);
  json results;
  results["partition"] = mp.partition;
  results["return_times"] = mp.return_times;
  const double delta = ff::bowen_delta(mp.ifs, 4);
  results["bowen_delta"] = delta;
  ff::GibbsModel model;
  model.ifs = mp.ifs;
  model.potential = ff::Potential::geometric(delta);
  model.validate();
  const ff::UniCertificate uni =
      ff::uni_margin(model, 2, ff::PairStrategy::suggested);
  const double closed = ff::mp_uni_c0_closed(alpha);
  results["uni"] = {{"c0", uni.c0},
                    {"c0_grid", uni.c0_grid},
                    {"closed_form", closed},
                    {"gap", std::abs(uni.c0_grid - closed)}};
  const bool certified =
      uni.found && uni.c0_grid > 0.0 && std::abs(uni.c0_grid - closed) <= 1e-8;
  results["certified"] = certified;
  emit_report(c, "mp_report", results,
              {{"model", "mp"}, {"alpha", alpha}, {"max_return", max_return}});
  return certified ? kExitOk : kExitCertification;
}

int run_staircase(const Common& c, int M, int iters, bool do_qnl) {
  const double kappa = 0.05, kappa0 = 0.05;
  const ff::PsiTrace tr =
      ff::psi_iterate(ff::frostman_uniform(M), iters, M, kappa, kappa0);
  ff::StaircaseIFS s = ff::staircase_build(tr.mu_fixed, kappa, kappa0);
  const double delta = ff::staircase_delta_root(s);
  json results;
  results["iterations"] = tr.iterations;
  results["converged"] = tr.converged;
  results["residuals"] = tr.residuals;
  results["frostman_ratios"] = tr.frostman_ratios;
  results["delta"] = delta;
  results["zeta0"] = ff::staircase_zeta(s, 0.0);
  results["zeta1"] = ff::staircase_zeta(s, 1.0);
  const ff::GibbsModel model = ff::staircase_model(s);

  const int N = 4;
  std::vector<int> la(N, 0), lb(N, 0);
  la[N - 1] = 1;  // innermost letter 1: g_a = g_0^{N-1} o g_1
  const ff::Word wa{la}, wb{lb};
  const double x0 = model.ifs.ambient.mid();
  // Push samples of the fixed-point measure through X_a - X_b; the measure
  // is nonatomic (piecewise-uniform bins), so the pushforward is uniform up
  // to sampling noise.
  const ff::EmpiricalMeasure samp =
      ff::frostman_sample(tr.mu_fixed, 100000, c.seed);
  const std::vector<double> unit(samp.samples.size(), 1.0);
  const ff::MnlReport mnl =
      ff::mnl_statistic_weighted(model, wa, wb, x0, samp.samples, unit);
  results["mnl"] = {{"C_mnl", mnl.C_mnl},
                    {"diverged", mnl.diverged},
                    {"ks_to_uniform", mnl.ks_to_uniform}};
  bool certified = tr.converged && std::abs(results["zeta0"].get<double>() -
                                            2.0) <= 1e-12 &&
                   results["zeta1"].get<double>() <= 0.6 && !mnl.diverged &&
                   mnl.ks_to_uniform <= 0.05;
  if (do_qnl) {
    const ff::QnlFit fit =
        ff::qnl_fit(model, {2, 3, 4}, {0.2, 0.05, 0.0125}, c.budget);
    results["qnl"] = {{"Theta", fit.Theta},       {"rho", fit.rho},
                      {"C", fit.C},               {"residual", fit.residual},
                      {"holdout", fit.holdout_rel_err},
                      {"pass", fit.pass},         {"violation", fit.violation}};
    certified = certified && fit.pass;
  }
  results["certified"] = certified;
  emit_report(c, "staircase_report", results,
              {{"model", "staircase"}, {"M", M}, {"iters", iters}});
  return certified ? kExitOk : kExitCertification;
}

int run_qnl(const Common& c, const std::string& model_path,
            const std::string& builtin, std::vector<int> n_values,
            std::vector<double> sigma_values) {
  std::string hash;
  const ff::GibbsModel model = load_model(model_path, builtin, &hash);
  if (n_values.empty()) n_values = {2, 3, 4, 5};
  if (sigma_values.empty()) sigma_values = {0.2, 0.05, 0.0125, 0.003125};
  const ff::QnlFit fit = ff::qnl_fit(model, n_values, sigma_values, c.budget);
  json results = {{"Theta", fit.Theta},
                  {"rho", fit.rho},
                  {"C", fit.C},
                  {"residual", fit.residual},
                  {"holdout_rel_err", fit.holdout_rel_err},
                  {"pass", fit.pass},
                  {"violation", fit.violation}};
  emit_report(c, "qnl_report", results,
              {{"model_hash", hash},
               {"n_values", n_values},
               {"sigma_values", sigma_values}});
  if (fit.violation) std::cout << "QNL violation: statistic pinned at 1\n";
  return fit.pass ? kExitOk : kExitCertification;
}

int run_tree(const Common& c, double t, int letters, int n_max, int tuples) {
  const ff::GibbsModel model = ff::lyons_model(t, letters);
  const ff::TreeConstants tc = ff::tree_constants(model, 1.0);
  json results;
  results["constants"] = {{"c0", tc.uni.c0},
                          {"N", tc.uni.N},
                          {"gamma", tc.gamma},
                          {"alpha_N", tc.alpha_N},
                          {"lambda", tc.lambda},
                          {"eps_gamma0", tc.eps_gamma0},
                          {"A", tc.A}};
  ff::CounterRng rng{c.seed};
  json table = json::array();
  bool all_pass = true;
  std::ostringstream csv;
  csv << "n,sigma,x,y,z,t_center,loss,bound,pass\n";
  int idx = 0;
  for (int i = 0; i < tuples; ++i) {
    const double x = rng.uniform(idx, 0), y = rng.uniform(idx, 1);
    const double z = rng.uniform(idx, 2);
    const double tcen = (2.0 * rng.uniform(idx, 3) - 1.0) * 2.0;
    ++idx;
    for (double div : {8.0, 40.0, 200.0}) {
      const double sigma = tc.uni.c0 / div;
      const ff::TreeLoss tl =
          ff::tree_loss(model, x, y, z, tcen, sigma, n_max, tc, c.budget);
      all_pass = all_pass && tl.pass;
      table.push_back({{"n", n_max}, {"sigma", sigma}, {"loss", tl.L},
                       {"bound", tl.bound}, {"pass", tl.pass}});
      csv << n_max << ',' << sigma << ',' << x << ',' << y << ',' << z << ','
          << tcen << ',' << tl.L << ',' << tl.bound << ',' << tl.pass << '\n';
    }
  }
  results["table"] = table;
  results["all_pass"] = all_pass;
  write_text(fs::path(c.out_dir) / "tree_table.csv", csv.str());
  emit_report(c, "tree_report", results,
              {{"model", "lyons"}, {"t", t}, {"letters", letters},
               {"n", n_max}, {"tuples", tuples}});
  return all_pass ? kExitOk : kExitCertification;
}

int run_census(const Common& c, double t, std::vector<int> n_values, int k,
               double xi, double eps1, double Theta, double rho) {
  const ff::GibbsModel model = ff::lyons_sub_model(t);
  const ff::LyapunovEstimate lam = ff::lyapunov(model, 8);
  const ff::PhaseParameters params = ff::PhaseParameters::derive(
      xi, lam.value, model.ifs.distortion_alpha, model.ifs.kappa_plus, Theta,
      rho, k, eps1);
  if (n_values.empty()) n_values = {2, 3};
  const auto series =
      ff::census_series(model, n_values, params, 5, c.budget);
  json table = json::array();
  std::ostringstream csv;
  csv << "n,bad_mass,bad_mass_mu,bound,pass\n";
  bool all_pass = true;
  for (const auto& r : series) {
    table.push_back({{"n", r.n},
                     {"bad_mass", r.bad_mass},
                     {"bad_mass_mu", r.bad_mass_mu},
                     {"threshold", r.threshold},
                     {"blocks_total", r.blocks_total},
                     {"blocks_bad", r.blocks_bad},
                     {"pass", r.pass}});
    csv << r.n << ',' << r.bad_mass << ',' << r.bad_mass_mu << ','
        << r.threshold << ',' << r.pass << '\n';
    all_pass = all_pass && r.pass;
  }
  json results = {{"table", table},
                  {"all_pass", all_pass},
                  {"epsilon0", params.epsilon0},
                  {"gamma2", params.gamma2},
                  {"lambda", lam.value}};
  write_text(fs::path(c.out_dir) / "census_table.csv", csv.str());
  emit_report(c, "census_report", results,
              {{"model", "lyons_sub"}, {"t", t}, {"k", k}, {"xi", xi},
               {"eps1", eps1}, {"Theta", Theta}, {"rho", rho}});
  return all_pass ? kExitOk : kExitCertification;
}

int run_fourier(const Common& c, const std::string& model_path,
                const std::string& builtin, const std::string& method,
                double xi_min, double xi_max, int ppo, int samples,
                int depth) {
  json results;
  ff::DecayReport dr;
  std::string hash;
  if (builtin == "uniform") {
    // Midpoint discretization of Lebesgue on [0,1]: the oscillatory sums
    // then track the sinc transform exactly until |xi| approaches the grid
    // frequency, with no Monte Carlo noise floor.
    ff::EmpiricalMeasure mu;
    mu.seed = c.seed;
    mu.samples.resize(samples);
    for (int i = 0; i < samples; ++i)
      mu.samples[i] = (i + 0.5) / samples;
    dr = ff::decay_profile(mu, [](double) { return 1.0; },
                           [](double x) { return x; }, xi_min, xi_max, ppo,
                           c.workers);
    hash = content_hash("builtin:uniform");
  } else {
    const ff::GibbsModel model = load_model(model_path, builtin, &hash);
    if (method == "quad") {
      const ff::CylinderMeasure cm =
          ff::cylinder_measure(model, depth, c.budget);
      dr = ff::decay_profile_cylinder(cm, model.ifs,
                                      [](double) { return 1.0; },
                                      [](double x) { return x; }, xi_min,
                                      xi_max, ppo);
    } else {
      const ff::EmpiricalMeasure mu =
          ff::sample(model, samples, depth, c.seed, c.workers);
      dr = ff::decay_profile(mu, [](double) { return 1.0; },
                             [](double x) { return x; }, xi_min, xi_max, ppo,
                             c.workers);
    }
  }
  results["decay"] = decay_json(dr);
  write_text(fs::path(c.out_dir) / "fourier_profile.csv", ff::decay_csv(dr));
  if (c.svg)
    write_text(fs::path(c.out_dir) / "fourier_profile.svg", ff::decay_svg(dr));
  emit_report(c, "fourier_report", results,
              {{"model_hash", hash}, {"method", method}, {"xi_min", xi_min},
               {"xi_max", xi_max}, {"points_per_octave", ppo},
               {"samples", samples}, {"depth", depth}});
  return dr.decay_failure ? kExitCertification : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracfour: fractal Fourier-decay analysis toolkit"};
  app.require_subcommand(1);

  Common c;
  double t = 0.5, a = 1.1, alpha = 0.25, b0 = -0.5, b1 = 0.5;
  int letters = 6, decay_samples = 0, max_return = 6;
  int M = 1 << 12, iters = 200;
  bool do_qnl = false;
  std::string model_path, builtin, method = "mc";
  std::vector<int> n_values;
  std::vector<double> sigma_values;
  int n_max = 8, tuples = 5, k = 2, ppo = 8, samples = 1000000, depth = 24;
  double xi = 1e6, eps1 = 0.01, Theta = 0.5, rho = 0.5;
  double xi_min = 16.0, xi_max = 1048576.0;

  CLI::App* lorenz = app.add_subcommand("lorenz", "two-branch induced model");
  lorenz->add_option("--a", a);
  lorenz->add_option("--alpha", alpha);
  lorenz->add_option("--b0", b0);
  lorenz->add_option("--b1", b1);
  add_common(lorenz, c);

  CLI::App* lyons = app.add_subcommand("lyons", "conductance system");
  lyons->add_option("--t", t);
  lyons->add_option("--letters", letters);
  lyons->add_option("--decay-samples", decay_samples,
                    "run a decay profile with this many samples");
  add_common(lyons, c);

  CLI::App* mp = app.add_subcommand("mp", "intermittent induced system");
  mp->add_option("--alpha", alpha);
  mp->add_option("--max-return", max_return);
  add_common(mp, c);

  CLI::App* stair = app.add_subcommand("staircase", "fixed-point iteration");
  stair->add_option("--M", M);
  stair->add_option("--iters", iters);
  stair->add_flag("--qnl", do_qnl, "also fit the quadruple statistic");
  add_common(stair, c);

  CLI::App* qnl = app.add_subcommand("qnl", "quadruple statistic fit");
  qnl->add_option("--model", model_path);
  qnl->add_option("--builtin", builtin);
  qnl->add_option("--n", n_values);
  qnl->add_option("--sigma", sigma_values);
  add_common(qnl, c);

  CLI::App* tree = app.add_subcommand("tree", "tree-lemma loss table");
  tree->add_option("--t", t);
  tree->add_option("--letters", letters);
  tree->add_option("--n", n_max);
  tree->add_option("--tuples", tuples);
  add_common(tree, c);

  CLI::App* census = app.add_subcommand("census", "well-distributed blocks");
  census->add_option("--t", t);
  census->add_option("--n", n_values);
  census->add_option("--k", k);
  census->add_option("--xi", xi);
  census->add_option("--eps1", eps1);
  census->add_option("--Theta", Theta);
  census->add_option("--rho", rho);
  add_common(census, c);

  CLI::App* fourier = app.add_subcommand("fourier", "decay profile");
  fourier->add_option("--model", model_path);
  fourier->add_option("--builtin", builtin);
  fourier->add_option("--method", method)
      ->check(CLI::IsMember({"mc", "quad"}));
  fourier->add_option("--xi-min", xi_min);
  fourier->add_option("--xi-max", xi_max);
  fourier->add_option("--ppo", ppo);
  fourier->add_option("--samples", samples);
  fourier->add_option("--depth", depth);
  add_common(fourier, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const std::string sub = app.get_subcommands().front()->get_name();
    apply_config(c, nullptr, sub);
    if (lorenz->parsed()) return run_lorenz(c, a, alpha, b0, b1);
    if (lyons->parsed()) return run_lyons(c, t, letters, decay_samples);
    if (mp->parsed()) return run_mp(c, alpha, max_return);
    if (stair->parsed()) return run_staircase(c, M, iters, do_qnl);
    if (qnl->parsed())
      return run_qnl(c, model_path, builtin, n_values, sigma_values);
    if (tree->parsed()) return run_tree(c, t, letters, n_max, tuples);
    if (census->parsed())
      return run_census(c, t, n_values, k, xi, eps1, Theta, rho);
    if (fourier->parsed())
      return run_fourier(c, model_path, builtin, method, xi_min, xi_max, ppo,
                         samples, depth);
    return kExitConfig;
  } catch (const ff::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
