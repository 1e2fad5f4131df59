#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <stdexcept>
#include <utility>
#include <vector>

#include "entgame/error.hpp"
#include "entgame/info.hpp"
#include "entgame/repeated_game.hpp"
#include "entgame/stage_game.hpp"
#include "entgame/strategy.hpp"

namespace entgame {

struct EquilibriumRegion {
  double lower = 0.0;
  double upper = 0.0;
  bool empty = true;
  double j_cav = 0.0;
  double j_vex = 0.0;
};

inline constexpr double kRegionTolerance = 1e-9;

// Envelope values at the conditional entropies of each player's source.
inline std::pair<double, double> envelope_pair(const StageGame& g, const JointPmf& src, int grid) {
  const SecurityCurve ca = security_curve(g, Player::kAlice, grid);
  const SecurityCurve cb = security_curve(g, Player::kBob, grid);
  return {ca.value_at(conditional_shannon(src)), cb.value_at(conditional_shannon(src.transposed()))};
}

inline EquilibriumRegion equilibrium_region(const StageGame& g, const JointPmf& src, double eps_a,
                                            double eps_b, int grid = 513) {
  if (eps_a < 0.0 || eps_b < 0.0) throw std::invalid_argument("equilibrium_region: eps < 0");
  EquilibriumRegion r;
  std::tie(r.j_cav, r.j_vex) = envelope_pair(g, src, grid);
  r.lower = std::max(g.min_entry(), r.j_vex - eps_a);
  r.upper = std::min(g.max_entry(), r.j_cav + eps_b);
  r.empty = r.lower > r.upper + kRegionTolerance;
  return r;
}

inline double min_epsilon_sum(const StageGame& g, const JointPmf& src, int grid = 513) {
  const auto [jc, jv] = envelope_pair(g, src, grid);
  return std::max(0.0, jv - jc);
}

struct FolkOptions {
  int max_cycle = 64;
  int max_block = 64;
  int max_window = 12;
  std::optional<double> punish_delta;
  int grid = 513;
  BuildOptions build;
};

struct Punishment {
  std::shared_ptr<BlockCodedStrategy> strategy;
  double value = 0.0;  // payoff u under the opponent's best response
  double slack = 0.0;
  int f = 1;
  double g = 0.0;
};

struct FolkProfile {
  double v = 0.0;
  double v_hat = 0.0;
  double delta = 0.0;
  double eps_a = 0.0;
  double eps_b = 0.0;
  int n_blocks = 1;
  int cycle_length = 1;
  int block_length = 1;
  std::vector<std::pair<int, int>> cycle;  // length block_length
  Punishment punish_by_alice;              // Alice's strategy against a deviating Bob
  Punishment punish_by_bob;
  std::shared_ptr<GrimTriggerStrategy> alice;
  std::shared_ptr<GrimTriggerStrategy> bob;
  double j_cav = 0.0;
  double j_vex = 0.0;

  int horizon() const { return n_blocks * block_length; }
  double delta_eff() const {
    return std::max({std::abs(v - v_hat), punish_by_alice.slack, punish_by_bob.slack});
  }

  nlohmann::json describe() const {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& [a, b] : cycle) c.push_back({a, b});
    return {{"v", v},
            {"v_hat", v_hat},
            {"delta", delta},
            {"delta_eff", delta_eff()},
            {"blocks", n_blocks},
            {"block_length", block_length},
            {"cycle_length", cycle_length},
            {"cycle", c},
            {"j_cav", j_cav},
            {"j_vex", j_vex},
            {"punish_by_alice", {{"slack", punish_by_alice.slack}, {"value", punish_by_alice.value},
                                 {"f", punish_by_alice.f}, {"g", punish_by_alice.g},
                                 {"strategy", punish_by_alice.strategy->describe()}}},
            {"punish_by_bob", {{"slack", punish_by_bob.slack}, {"value", punish_by_bob.value},
                               {"f", punish_by_bob.f}, {"g", punish_by_bob.g},
                               {"strategy", punish_by_bob.strategy->describe()}}}};
  }
};

namespace detail {

struct CycleSpec {
  std::vector<std::pair<int, int>> cycle;
  double v_hat = 0.0;
};

// Shortest cycle over two bracketing payoff entries with average within tol of v.
inline CycleSpec payoff_cycle(const StageGame& g, double v, double tol, int max_cycle) {
  const int na = g.num_a(), nb = g.num_b();
  for (int i = 0; i < na * nb; ++i)
    if (std::abs(g.u(i / nb, i % nb) - v) <= 1e-12)
      return {{{i / nb, i % nb}}, g.u(i / nb, i % nb)};
  int lo = -1, hi = -1;
  double spread = std::numeric_limits<double>::infinity();
  for (int i = 0; i < na * nb; ++i) {
    const double ul = g.u(i / nb, i % nb);
    if (ul > v) continue;
    for (int k = 0; k < na * nb; ++k) {
      const double uh = g.u(k / nb, k % nb);
      if (uh < v) continue;
      if (uh - ul < spread - 1e-15) {
        spread = uh - ul;
        lo = i;
        hi = k;
      }
    }
  }
  if (lo < 0) throw NotConstructible("payoff_cycle: v outside the payoff range");
  const double ul = g.u(lo / nb, lo % nb), uh = g.u(hi / nb, hi % nb);
  const double w = (v - ul) / (uh - ul);
  // Smallest denominator meeting tol; otherwise the closest fraction.
  long long num = 0, den = 1;
  double err = std::numeric_limits<double>::infinity();
  for (long long k = 1; k <= std::max(1, max_cycle); ++k) {
    const long long m = std::llround(w * static_cast<double>(k));
    const double e = std::abs(ul + (uh - ul) * static_cast<double>(m) / k - v);
    if (e < err - 1e-15) {
      err = e;
      num = m;
      den = k;
    }
    if (e <= tol) break;
  }
  CycleSpec c;
  for (long long t = 0; t < den; ++t)
    c.cycle.push_back(t < num ? std::make_pair(hi / nb, hi % nb) : std::make_pair(lo / nb, lo % nb));
  double s = 0.0;
  for (const auto& [a, b] : c.cycle) s += g.u(a, b);
  c.v_hat = s / static_cast<double>(den);
  return c;
}

// Best causal punishment of horizon K for the row player of `row`.
inline Punishment best_punishment(const StageGame& row, const JointPmf& src, int K,
                                  const EnvelopeDecomposition& d, double target, Rng& rng,
                                  const FolkOptions& opt) {
  Punishment best;
  best.slack = std::numeric_limits<double>::infinity();
  std::vector<double> gs{0.0};
  if (!d.trivial && d.r > 0.0) {
    gs.push_back(0.25 * d.r);
    gs.push_back(0.5 * d.r);
  }
  const RateParams p = RateParams::from(d);
  for (int f = 1; f <= K; ++f) {
    if ((K + f - 1) / f > opt.max_window && !d.trivial) continue;
    for (size_t gi = 0; gi < gs.size(); ++gi) {
      const double g = gs[gi];
      try {
        const BlockSchedule s = block_schedule(K, f, g, 0.0, p);
        Rng child = rng.fork(static_cast<std::uint64_t>(f) * 8 + gi);
        auto sigma = build_block_markov_strategy(src, s, d, child, opt.build);
        const double val = best_response_b(row, *sigma, src, false, opt.build.limits).value;
        const double slack = target - val;
        if (slack < best.slack - 1e-15) best = {sigma, val, slack, f, g};
      } catch (const EnumerationOverflow&) {
      }
      if (d.trivial) break;
    }
    if (d.trivial) break;
  }
  if (!best.strategy) throw EnumerationOverflow("folk: no punishment fits the enumeration limits");
  best.slack = std::max(0.0, best.slack);
  return best;
}

}  // namespace detail

inline FolkProfile construct_folk_profile(const StageGame& g, const JointPmf& src, double v,
                                          double eps_a, double eps_b, double delta, int n_blocks,
                                          Rng& rng, const FolkOptions& opt = {}) {
  if (n_blocks < 1) throw std::invalid_argument("construct_folk_profile: N must be positive");
  if (delta < 0.0) throw std::invalid_argument("construct_folk_profile: delta must be >= 0");
  const EquilibriumRegion reg = equilibrium_region(g, src, eps_a, eps_b, opt.grid);
  if (reg.empty || v < reg.lower - kRegionTolerance || v > reg.upper + kRegionTolerance)
    throw NotConstructible("construct_folk_profile: v is outside the equilibrium region");

  FolkProfile prof;
  prof.v = v;
  prof.delta = delta;
  prof.eps_a = eps_a;
  prof.eps_b = eps_b;
  prof.n_blocks = n_blocks;
  prof.j_cav = reg.j_cav;
  prof.j_vex = reg.j_vex;
  const detail::CycleSpec cyc = detail::payoff_cycle(g, v, std::max(delta, 1e-12), opt.max_cycle);
  prof.cycle_length = static_cast<int>(cyc.cycle.size());
  prof.v_hat = cyc.v_hat;

  const JointPmf src_b = src.transposed();
  const auto da = envelope_decomposition(g, Player::kAlice, conditional_shannon(src), src, opt.grid);
  const auto db_row = detail::row_decomposition(g.for_bob(), conditional_shannon(src_b), src_b, opt.grid);
  const double pdelta = opt.punish_delta.value_or(delta);

  std::optional<std::pair<Punishment, Punishment>> chosen;
  int chosen_k = 0;
  for (int K = prof.cycle_length; K <= std::max(opt.max_block, prof.cycle_length); K += prof.cycle_length) {
    Rng ra = rng.fork(2 * static_cast<std::uint64_t>(K));
    Rng rb = rng.fork(2 * static_cast<std::uint64_t>(K) + 1);
    Punishment pa = detail::best_punishment(g, src, K, da, reg.j_cav, ra, opt);
    // Bob's punishment is built in the game seen from Bob; values flip sign.
    Punishment pb = detail::best_punishment(g.for_bob(), src_b, K, db_row, -reg.j_vex, rb, opt);
    pb.value = -pb.value;
    const double worst = std::max(pa.slack, pb.slack);
    const bool better = !chosen || worst < std::max(chosen->first.slack, chosen->second.slack) - 1e-15;
    if (better) {
      chosen.emplace(pa, pb);
      chosen_k = K;
    }
    if (worst <= pdelta + 1e-12) break;
  }
  prof.block_length = chosen_k;
  prof.punish_by_alice = chosen->first;
  prof.punish_by_bob = chosen->second;
  std::vector<int> own_a, own_b;
  for (int t = 0; t < chosen_k; ++t) {
    own_a.push_back(cyc.cycle[t % prof.cycle_length].first);
    own_b.push_back(cyc.cycle[t % prof.cycle_length].second);
  }
  for (int t = 0; t < chosen_k; ++t) prof.cycle.push_back({own_a[t], own_b[t]});
  prof.alice = std::make_shared<GrimTriggerStrategy>(own_a, own_b, n_blocks, g.num_a(),
                                                     prof.punish_by_alice.strategy);
  prof.bob = std::make_shared<GrimTriggerStrategy>(own_b, own_a, n_blocks, g.num_b(),
                                                   prof.punish_by_bob.strategy);
  return prof;
}

// Largest gain of a unilateral deviation, at least zero, optionally restricted
// to deviations starting in one block. Punished blocks are worth the exact
// best-response value against the punishment.
inline double deviation_gain(const StageGame& g, const FolkProfile& prof, Player deviator,
                             std::optional<int> only_block = std::nullopt) {
  const int K = prof.block_length, N = prof.n_blocks;
  const double n = static_cast<double>(N) * K;
  const bool alice = deviator == Player::kAlice;
  // Deviator's total payoff over one punished block, in its own orientation.
  const double pun_total = alice ? K * prof.punish_by_bob.value : -K * prof.punish_by_alice.value;
  auto own_payoff = [&](int a, int b) { return alice ? g.u(a, b) : -g.u(a, b); };
  double cycle_total = 0.0;
  for (const auto& [a, b] : prof.cycle) cycle_total += own_payoff(a, b);
  std::vector<double> best_static(K);
  for (int t = 0; t < K; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    const int nd = alice ? g.num_a() : g.num_b();
    for (int d = 0; d < nd; ++d)
      m = std::max(m, alice ? own_payoff(d, prof.cycle[t].second) : own_payoff(prof.cycle[t].first, d));
    best_static[t] = m;
  }
  const double on_path = alice ? prof.v_hat : -prof.v_hat;
  double best = 0.0;
  for (int j = 0; j < N; ++j) {
    if (only_block && *only_block != j) continue;
    double prefix = 0.0;
    for (int s = 0; s < K; ++s) {
      double tail = 0.0;
      for (int t = s + 1; t < K; ++t) tail += best_static[t];
      const int nd = alice ? g.num_a() : g.num_b();
      for (int d = 0; d < nd; ++d) {
        const int own = alice ? prof.cycle[s].first : prof.cycle[s].second;
        if (d == own) continue;
        const double here = alice ? own_payoff(d, prof.cycle[s].second) : own_payoff(prof.cycle[s].first, d);
        const double total = j * cycle_total + prefix + here + tail + (N - j - 1) * pun_total;
        best = std::max(best, total / n - on_path);
      }
      prefix += own_payoff(prof.cycle[s].first, prof.cycle[s].second);
    }
  }
  return best;
}

// Payoff of the profile itself; play on path does not depend on the source.
inline double on_path_payoff(const StageGame& g, const FolkProfile& prof) {
  const int n = prof.horizon();
  std::vector<int> zeros(n, 0), as, bs;
  double s = 0.0;
  for (int t = 0; t < n; ++t) {
    const std::span<const int> z(zeros);
    const int a = prof.alice->act(t, {z.first(t + 1), as, bs});
    const int b = prof.bob->act(t, {z.first(t + 1), bs, as});
    as.push_back(a);
    bs.push_back(b);
    s += g.u(a, b);
  }
  return s / n;
}

}  // namespace entgame
