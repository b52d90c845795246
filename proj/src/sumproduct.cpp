#include "fracfour/sumproduct.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "fracfour/ifs.hpp"
#include "fracfour/numerics.hpp"

namespace ff {

namespace {

std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

BlockDecomposition make_block(std::vector<Word> A_words, const MarkovIFS& ifs) {
  if (A_words.size() < 2)
    throw std::invalid_argument("make_block: need at least two outer words");
  BlockDecomposition A;
  A.k = static_cast<int>(A_words.size()) - 1;
  A.n = A_words.front().length();
  for (const Word& w : A_words) {
    if (w.length() != A.n)
      throw std::invalid_argument("make_block: outer words of unequal length");
    if (!w.admissible(ifs.rule))
      throw std::invalid_argument("make_block: inadmissible outer word");
  }
  A.A_words = std::move(A_words);
  return A;
}

Word assemble_block(const BlockDecomposition& A, const std::vector<Word>& B,
                    const TransitionRule& rule) {
  if (static_cast<int>(B.size()) != A.k)
    throw std::invalid_argument("assemble_block: need one inner word per slot");
  Word out = A.A_words[0];
  for (int j = 0; j < A.k; ++j) {
    auto with_b = concat(out, B[j], rule, /*primed=*/true);
    if (!with_b) throw std::invalid_argument("assemble_block: inadmissible join");
    auto with_a = concat(*with_b, A.A_words[j + 1], rule, /*primed=*/true);
    if (!with_a) throw std::invalid_argument("assemble_block: inadmissible join");
    out = std::move(*with_a);
  }
  return out;
}

PhaseParameters PhaseParameters::derive(double xi, double lambda, double alpha,
                                        double kappa_plus, double Theta,
                                        double rho, int k, double epsilon1) {
  if (!(kappa_plus > 0.0 && kappa_plus < 1.0) || !(rho > 0.0 && rho < 1.0) ||
      !(Theta > 0.0 && Theta < 1.0) || !(lambda > 0.0) || k < 1)
    throw std::invalid_argument("PhaseParameters: invalid inputs");
  PhaseParameters p;
  p.xi = xi;
  p.lambda = lambda;
  p.epsilon0 = alpha * std::abs(std::log(kappa_plus)) *
               std::abs(std::log(rho)) / 10.0;
  p.epsilon1 = epsilon1;
  p.gamma2 = Theta / 4.0;
  p.k = k;
  const double rate = (2.0 * k + 1.0) * lambda + p.epsilon0;
  p.n = std::max(1, static_cast<int>(std::floor(std::log(std::abs(xi)) / rate)));
  return p;
}

double zeta(const BlockDecomposition& A, int j, const Word& b,
            const GibbsModel& model, double lambda) {
  if (j < 1 || j > A.k) throw std::invalid_argument("zeta: slot out of range");
  const auto w = concat(A.A_words[j - 1], b, model.ifs.rule, /*primed=*/true);
  if (!w) throw std::invalid_argument("zeta: inadmissible a_j' b");
  const double x = model.ref_point(A.A_words[j]);
  return std::exp(2.0 * lambda * A.n + CompositeMap(*w, &model.ifs).log_deriv(x));
}

double eta(const BlockDecomposition& A, double x, double y,
           const PhaseParameters& params, const GibbsModel& model,
           const std::function<double(double)>& psi_prime) {
  const CompositeMap last(A.A_words[A.k], &model.ifs);
  double v = std::exp(-2.0 * params.lambda * A.n * A.k) * params.xi *
             std::abs(last.value(x) - last.value(y));
  if (psi_prime) v *= std::abs(psi_prime(model.ref_point(A.A_words[0])));
  return v;
}

namespace {

// Per-slot table of (zeta, mass) over the inner alphabet of the slot.
struct SlotTable {
  std::vector<double> zetas;
  std::vector<double> masses;
};

std::vector<SlotTable> slot_tables(const BlockDecomposition& A,
                                   const GibbsModel& model, double lambda,
                                   std::uint64_t budget) {
  const double per_slot = model.ifs.rule.count_words(A.n);
  const double tuples = std::pow(per_slot, A.k);
  if (tuples > static_cast<double>(budget))
    throw BudgetError(static_cast<std::uint64_t>(tuples), budget);
  std::vector<SlotTable> tables(A.k);
  for (int j = 1; j <= A.k; ++j) {
    SlotTable& tb = tables[j - 1];
    enumerate_words(A.n, model.ifs.alphabet, model.ifs.rule,
                    [&](const Word& b) {
                      if (!concat(A.A_words[j - 1], b, model.ifs.rule, true))
                        return;
                      tb.zetas.push_back(zeta(A, j, b, model, lambda));
                      tb.masses.push_back(model.p_mass(b));
                    },
                    budget);
  }
  return tables;
}

}  // namespace

double exp_sum_at_eta(const BlockDecomposition& A, double eta_value,
                      const GibbsModel& model, double lambda,
                      std::uint64_t budget) {
  const auto tables = slot_tables(A, model, lambda, budget);
  KahanComplexSum acc;
  // DFS over the inner tuple, carrying the zeta product and the mass product.
  std::function<void(int, double, double)> rec = [&](int j, double prod,
                                                     double mass) {
    if (j == A.k) {
      acc.add(std::polar(mass, eta_value * prod));
      return;
    }
    const SlotTable& tb = tables[j];
    for (std::size_t i = 0; i < tb.zetas.size(); ++i)
      rec(j + 1, prod * tb.zetas[i], mass * tb.masses[i]);
  };
  rec(0, 1.0, 1.0);
  return std::abs(acc.value());
}

double exp_sum(const BlockDecomposition& A, double x, double y,
               const PhaseParameters& params, const GibbsModel& model,
               const std::function<double(double)>& psi_prime,
               std::uint64_t budget) {
  return exp_sum_at_eta(A, eta(A, x, y, params, model, psi_prime), model,
                        params.lambda, budget);
}

double block_moment(const BlockDecomposition& A, int j, double t,
                    const GibbsModel& model, double lambda,
                    std::uint64_t budget) {
  if (t < 0.0) throw std::invalid_argument("block_moment: t must be >= 0");
  KahanSum acc;
  enumerate_words(A.n, model.ifs.alphabet, model.ifs.rule,
                  [&](const Word& b) {
                    if (!concat(A.A_words[j - 1], b, model.ifs.rule, true))
                      return;
                    acc.add(model.p_mass(b) *
                            std::exp(t * std::abs(std::log(
                                             zeta(A, j, b, model, lambda)))));
                  },
                  budget);
  return acc.value();
}

namespace {

// Sigma ladder e^{-l} for integer l in [eps0 eps1 n / 2, 4 eps0 n], always
// including both endpoint scales so the sweep is never empty.
std::vector<double> sigma_ladder(const PhaseParameters& p, int n) {
  const double lo_exp = p.epsilon0 * p.epsilon1 * n / 2.0;
  const double hi_exp = 4.0 * p.epsilon0 * n;
  std::vector<double> sigmas;
  sigmas.push_back(std::exp(-hi_exp));
  for (int l = static_cast<int>(std::ceil(lo_exp));
       l <= static_cast<int>(std::floor(hi_exp)); ++l)
    if (l >= 1) sigmas.push_back(std::exp(-static_cast<double>(l)));
  sigmas.push_back(std::exp(-lo_exp));
  std::sort(sigmas.begin(), sigmas.end());
  sigmas.erase(std::unique(sigmas.begin(), sigmas.end()), sigmas.end());
  return sigmas;
}

}  // namespace

CensusReport well_distributed_census(const GibbsModel& model, int n,
                                     const PhaseParameters& params,
                                     int x_grid, std::uint64_t budget) {
  if (model.ifs.alphabet.size < 2)
    throw std::invalid_argument("census: a one-letter attractor is a point");
  const TransitionRule& rule = model.ifs.rule;
  const std::vector<Word> words = all_words(n, model.ifs.alphabet, rule, budget);
  const std::size_t W = words.size();
  const std::uint64_t blocks = ipow(W, params.k + 1);
  if (blocks > budget) throw BudgetError(blocks, budget);

  CensusReport rep;
  rep.n = n;
  rep.k = params.k;
  rep.alpha_reg = params.epsilon0 * params.epsilon1 * params.gamma2;
  rep.sigmas = sigma_ladder(params, n);
  rep.blocks_total = blocks;

  std::vector<double> xs(x_grid);
  for (int i = 0; i < x_grid; ++i)
    xs[i] = model.ifs.ambient.lo +
            (i + 0.5) * model.ifs.ambient.length() / x_grid;

  // The slot test only depends on the pair (a_j, a_{j+1}), so precompute a
  // W x W pass table; a block is well-distributed iff every consecutive
  // outer pair passes.  ok_mu is the same test with cylinder-mass weights.
  std::vector<double> mu_w(W);
  for (std::size_t i = 0; i < W; ++i) mu_w[i] = model.p_mass(words[i]);

  struct PairTables {
    std::vector<char> ok_w, ok_mu;
  };
  PairTables pt;
  pt.ok_w.assign(W * W, 1);
  pt.ok_mu.assign(W * W, 1);
  auto chunk = [&](std::size_t lo, std::size_t hi) {
    PairTables local;
    local.ok_w.assign(W * W, 1);
    local.ok_mu.assign(W * W, 1);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const std::size_t u = idx / W, v = idx % W;
      BlockDecomposition pairA = make_block({words[u], words[v]}, model.ifs);
      std::vector<double> lz(W);
      bool any = false;
      for (std::size_t b = 0; b < W; ++b) {
        if (!concat(words[u], words[b], rule, true)) {
          lz[b] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        lz[b] = std::log(zeta(pairA, 1, words[b], model, params.lambda));
        any = true;
      }
      if (!any) continue;
      for (double sigma : rep.sigmas) {
        const double cap = std::pow(sigma, params.gamma2);
        // mu-weighted test is x-independent.
        double s_mu = 0.0;
        for (std::size_t b = 0; b < W; ++b)
          for (std::size_t c = 0; c < W; ++c)
            if (std::abs(lz[b] - lz[c]) <= sigma) s_mu += mu_w[b] * mu_w[c];
        if (s_mu > cap) local.ok_mu[idx] = 0;
        for (double x : xs) {
          double s_w = 0.0;
          std::vector<double> wb(W);
          for (std::size_t b = 0; b < W; ++b)
            wb[b] = std::isnan(lz[b]) ? 0.0 : model.weight(words[b], x);
          for (std::size_t b = 0; b < W; ++b)
            for (std::size_t c = 0; c < W; ++c)
              if (std::abs(lz[b] - lz[c]) <= sigma) s_w += wb[b] * wb[c];
          if (s_w > cap) {
            local.ok_w[idx] = 0;
            break;
          }
        }
        if (!local.ok_w[idx] && !local.ok_mu[idx]) break;
      }
    }
    return local;
  };
  pt = parallel_chunks<PairTables>(
      W * W, default_workers(), chunk,
      [](PairTables into, const PairTables& from) {
        for (std::size_t i = 0; i < into.ok_w.size(); ++i) {
          into.ok_w[i] = static_cast<char>(into.ok_w[i] & from.ok_w[i]);
          into.ok_mu[i] = static_cast<char>(into.ok_mu[i] & from.ok_mu[i]);
        }
        return into;
      },
      pt);

  // Sweep blocks as base-W digit strings a_1 .. a_{k+1}.
  KahanSum bad_w, bad_mu;
  std::uint64_t bad_count = 0;
  std::vector<std::size_t> digit(params.k + 1, 0);
  for (std::uint64_t code = 0; code < blocks; ++code) {
    std::uint64_t c = code;
    for (int d = params.k; d >= 0; --d) {
      digit[d] = c % W;
      c /= W;
    }
    bool admissible = true, good_w = true, good_mu = true;
    Word block = words[digit[0]];
    for (int j = 0; j < params.k; ++j) {
      const std::size_t u = digit[j], v = digit[j + 1];
      if (!pt.ok_w[u * W + v]) good_w = false;
      if (!pt.ok_mu[u * W + v]) good_mu = false;
      // The weighted block is the plain concatenation a_1 ... a_{k+1}.
      auto joined = concat(block, words[v], rule, false);
      if (!joined) {
        admissible = false;
        break;
      }
      block = std::move(*joined);
    }
    if (!admissible) continue;
    const double w_block = model.p_mass(block);
    if (!good_w) {
      bad_w.add(w_block);
      ++bad_count;
    }
    if (!good_mu) bad_mu.add(w_block);
  }
  rep.bad_mass = bad_w.value();
  rep.bad_mass_mu = bad_mu.value();
  rep.blocks_bad = bad_count;
  rep.threshold = std::exp(-rep.alpha_reg * n);  // C = 1 until fitted
  rep.pass = rep.bad_mass <= rep.threshold;
  return rep;
}

std::vector<CensusReport> census_series(const GibbsModel& model,
                                        const std::vector<int>& n_values,
                                        const PhaseParameters& params,
                                        int x_grid, std::uint64_t budget) {
  std::vector<CensusReport> out;
  for (int n : n_values)
    out.push_back(well_distributed_census(model, n, params, x_grid, budget));
  double C = 0.0;
  for (const CensusReport& r : out)
    C = std::max(C, r.bad_mass * std::exp(r.alpha_reg * r.n));
  for (CensusReport& r : out) {
    r.threshold = C * std::exp(-r.alpha_reg * r.n);
    r.pass = r.bad_mass <= r.threshold + 1e-12;
  }
  return out;
}

}  // namespace ff
