#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "entgame/error.hpp"
#include "entgame/info.hpp"
#include "entgame/prob.hpp"
#include "entgame/source_sim.hpp"
#include "entgame/stage_game.hpp"
#include "entgame/strategy.hpp"

namespace entgame {

enum class GameKind { kCausal, kNonCausal, kExponential };

inline std::string to_string(GameKind k) {
  switch (k) {
    case GameKind::kCausal: return "causal";
    case GameKind::kNonCausal: return "noncausal";
    case GameKind::kExponential: return "exponential";
  }
  return "unknown";
}

inline GameKind parse_game_kind(const std::string& s) {
  if (s == "causal") return GameKind::kCausal;
  if (s == "noncausal" || s == "non-causal") return GameKind::kNonCausal;
  if (s == "exponential") return GameKind::kExponential;
  throw ConfigError("unknown game kind: " + s);
}

// Constants of a rate statement. For the exponential case beta is the
// exponent and gamma the prefactor.
struct RateParams {
  double r = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double value = 0.0;
  bool trivial = false;

  static RateParams from(const EnvelopeDecomposition& d) {
    return {d.r, d.beta, d.gamma, d.mu, d.envelope_value, d.trivial};
  }
};

struct BlockSchedule {
  int n = 0;
  int f = 1;
  double g = 0.0;
  double h = 0.0;
  std::vector<int> starts;
  std::vector<int> lengths;
  std::vector<int> m;
  double delta = 1.0;
};

inline BlockSchedule block_schedule(int n, int f, double g, double h, const RateParams& p) {
  if (n < 1) throw std::invalid_argument("block_schedule: n must be positive");
  if (f < 1 || f > n) throw std::invalid_argument("block_schedule: need 1 <= f <= n");
  if (g < 0.0 || g > p.r + 1e-12) throw std::invalid_argument("block_schedule: need 0 <= g <= r");
  if (h < 0.0 || h > 1.0) throw std::invalid_argument("block_schedule: need 0 <= h <= 1");
  BlockSchedule s{n, f, g, h, {}, {}, {}, 1.0};
  const int base = n / f, extra = n % f;
  int start = 0;
  for (int i = 0; i < f; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    s.starts.push_back(start);
    s.lengths.push_back(len);
    s.m.push_back(std::max(0, static_cast<int>(std::floor(len * (p.r - g) + 1e-9))));
    start += len;
  }
  s.delta = std::exp2(-0.5 * (static_cast<double>(n) / f - 1.0) * h * (p.beta * g - p.gamma * h));
  return s;
}

inline double payoff_lower_bound(GameKind kind, const RateParams& p, int n, int f, double g,
                                 double h) {
  if (n < 1) throw std::invalid_argument("payoff_lower_bound: n must be positive");
  switch (kind) {
    case GameKind::kCausal: {
      const double d = std::exp2(-0.5 * (static_cast<double>(n) / f - 1.0) * h *
                                 (p.beta * g - p.gamma * h));
      return p.value - p.mu * (1.0 / n + 1.0 / f + static_cast<double>(f) / n + g + d);
    }
    case GameKind::kNonCausal: {
      const double d = std::exp2(-0.5 * n * h * (p.beta * g - p.gamma * h));
      return p.value - p.mu * (1.0 / n + g + d);
    }
    case GameKind::kExponential:
      return p.value - p.gamma * std::exp2(-p.beta * n);
  }
  return p.value;
}

struct RateSchedule {
  int f = 1;
  double g = 0.0;
  double h = 0.0;
  double k = 0.0;
};

// Schedule with the free constant k at the midpoint of its feasible range.
inline RateSchedule rate_schedule(GameKind kind, int n, const RateParams& p) {
  if (n < 1) throw std::invalid_argument("rate_schedule: n must be positive");
  RateSchedule s;
  if (p.trivial || p.r <= 0.0 || kind == GameKind::kExponential) return s;
  if (p.beta <= 0.0) throw std::invalid_argument("rate_schedule: beta must be positive");
  double kmax = 1.0 / p.r;
  if (p.gamma > 0.0) kmax = std::min(kmax, p.beta / p.gamma);
  s.k = 0.5 * kmax;
  const double c = s.k * (p.beta - s.k * p.gamma);
  const double ln = std::log2(static_cast<double>(n));
  if (kind == GameKind::kCausal) {
    const double f = std::ceil(s.k * p.r * p.r * (p.beta - s.k * p.gamma) * std::sqrt(n));
    s.f = static_cast<int>(std::clamp(f, 1.0, static_cast<double>(n)));
    s.g = std::min(p.r, p.r * std::sqrt(ln) / std::pow(n, 0.25));
  } else {
    s.g = std::min(p.r, std::sqrt(ln / (c * n)));
  }
  s.h = std::min(1.0, s.k * s.g);
  return s;
}

struct BuildOptions {
  SimulatorSearch search;
  Limits limits;
};

namespace detail {

inline Pmf block_target(const Pmf& p1, const Pmf& p2, int len, int m, std::uint64_t limit) {
  std::vector<Pmf> f;
  for (int k = 0; k < len; ++k) f.push_back(k < m ? p1 : p2);
  return product_pmf(f, limit);
}

inline std::shared_ptr<BlockCodedStrategy> constant_strategy(int n, int nx, int na, int action) {
  CodedBlock b;
  b.start = 0;
  b.length = n;
  b.fixed_action = action;
  return std::make_shared<BlockCodedStrategy>(n, nx, na, std::vector<CodedBlock>{b});
}

inline CodedBlock coded_block(const JointPmf& src, const Pmf& target, int start, int len,
                              int wstart, int wlen, int m, Rng& rng, const BuildOptions& opt) {
  const JointPmf inst = iid_extend(src, wlen, opt.limits.pmf_size);
  const SimulatorResult r = find_simulator(inst, target, rng, opt.search);
  CodedBlock b;
  b.start = start;
  b.length = len;
  b.source_start = wstart;
  b.source_length = wlen;
  b.map = r.map;
  b.m = m;
  b.tv = r.report.tv;
  b.bound = r.report.bound;
  b.mode = r.report.mode;
  return b;
}

}  // namespace detail

// Causal block-Markov strategy: block i maps the previous block's source
// symbols to its actions; the first block plays action 0.
inline std::shared_ptr<BlockCodedStrategy> build_block_markov_strategy(
    const JointPmf& src, const BlockSchedule& s, const EnvelopeDecomposition& d, Rng& rng,
    const BuildOptions& opt = {}) {
  const int na = d.p1.size(), nx = src.x_size();
  if (d.trivial) return detail::constant_strategy(s.n, nx, na, d.trivial_action);
  std::vector<CodedBlock> blocks;
  CodedBlock first;
  first.start = 0;
  first.length = s.lengths[0];
  first.fixed_action = 0;
  blocks.push_back(first);
  std::map<std::tuple<int, int, int>, CodedBlock> cache;
  for (size_t i = 1; i < s.lengths.size(); ++i) {
    const int len = s.lengths[i], wlen = s.lengths[i - 1], m = s.m[i];
    const auto key = std::make_tuple(wlen, len, m);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const Pmf target = detail::block_target(d.p1, d.p2, len, m, opt.limits.pmf_size);
      Rng child = rng.fork(i);
      it = cache.emplace(key, detail::coded_block(src, target, 0, len, 0, wlen, m, child, opt)).first;
    }
    CodedBlock b = it->second;
    b.start = s.starts[i];
    b.source_start = s.starts[i - 1];
    blocks.push_back(std::move(b));
  }
  return std::make_shared<BlockCodedStrategy>(s.n, nx, na, std::move(blocks));
}

// Single block reading the whole source sequence.
inline std::shared_ptr<BlockCodedStrategy> build_noncausal_strategy(
    const JointPmf& src, int n, double g, const EnvelopeDecomposition& d, Rng& rng,
    const BuildOptions& opt = {}) {
  const int na = d.p1.size(), nx = src.x_size();
  if (n < 1) throw std::invalid_argument("build_noncausal_strategy: n must be positive");
  if (d.trivial) return detail::constant_strategy(n, nx, na, d.trivial_action);
  const int m = std::max(0, static_cast<int>(std::floor(n * (d.r - g) + 1e-9)));
  const Pmf target = detail::block_target(d.p1, d.p2, n, m, opt.limits.pmf_size);
  Rng child = rng.fork(0);
  std::vector<CodedBlock> blocks{detail::coded_block(src, target, 0, n, 0, n, m, child, opt)};
  return std::make_shared<BlockCodedStrategy>(n, nx, na, std::move(blocks));
}

struct ExponentialStrategy {
  std::shared_ptr<BlockCodedStrategy> strategy;
  RateParams params;
  Pmf target;
};

// Applies when H(X|Y) exceeds the entropy of Alice's minimax strategy.
inline std::optional<ExponentialStrategy> build_exponential_strategy(
    const StageGame& game, const JointPmf& src, int n, Rng& rng, const BuildOptions& opt = {}) {
  const MinimaxSolution mm = minimax(game);
  const auto e = iid_simulation_exponent(src, mm.alice);
  if (!e) return std::nullopt;
  const Pmf target = iid_extend(mm.alice, n, opt.limits.pmf_size);
  Rng child = rng.fork(0);
  std::vector<CodedBlock> blocks{
      detail::coded_block(src, target, 0, n, 0, n, n, child, opt)};
  ExponentialStrategy out;
  out.strategy = std::make_shared<BlockCodedStrategy>(n, src.x_size(), game.num_a(), std::move(blocks));
  out.params.beta = e->epsilon;
  out.params.gamma = 2.0 * game.max_abs();
  out.params.value = mm.value;
  out.params.r = 1.0;
  out.target = mm.alice;
  return out;
}

struct BestResponse {
  std::shared_ptr<ResponseStrategy> strategy;
  double value = 0.0;  // average payoff u against the response
};

namespace detail {

inline int argmin_index(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

// Row player of `g` plays sigma; the column player minimizes u.
inline BestResponse column_best_response(const StageGame& g, const BlockCodedStrategy& sigma,
                                         const JointPmf& src, bool responder_noncausal,
                                         const Limits& lim) {
  const int n = sigma.horizon(), na = g.num_a(), nb = g.num_b(), ny = src.y_size();
  if (sigma.num_actions() != na || sigma.source_alphabet() != src.x_size())
    throw std::invalid_argument("best_response: strategy does not match game or source");
  std::vector<ResponseRule> rules(n);
  double total = 0.0;
  std::vector<std::pair<int, int>> windows;
  for (const CodedBlock& b : sigma.blocks()) {
    if (b.fixed_action >= 0) {
      std::vector<double> cost(nb);
      for (int c = 0; c < nb; ++c) cost[c] = g.u(b.fixed_action, c);
      const int best = argmin_index(cost.data(), nb);
      for (int k = 0; k < b.length; ++k) {
        rules[b.start + k].dense = {best};
        rules[b.start + k].opp_start = b.start + k;
      }
      total += b.length * cost[best];
      continue;
    }
    for (const auto& [ws, wl] : windows)
      if (b.source_start < ws + wl && ws < b.source_start + b.source_length)
        throw std::invalid_argument("best_response: overlapping source windows");
    windows.emplace_back(b.source_start, b.source_length);
    const int wl = b.source_length, L = b.length;
    const std::uint64_t nxw = checked_pow(src.x_size(), wl, lim.block_pairs);
    const std::uint64_t nyw = checked_pow(ny, wl, lim.block_pairs);
    if (nxw > lim.block_pairs || nyw > lim.block_pairs || nxw * nyw > lim.block_pairs)
      throw EnumerationOverflow("best_response: block window too large");
    const JointPmf jw = iid_extend(src, wl, lim.block_pairs);
    for (int k = 0; k < L; ++k) {
      const int t = b.start + k;
      int c = wl;
      if (!responder_noncausal) c = std::clamp(t - b.source_start + 1, 0, wl);
      std::uint64_t ydiv = 1;
      for (int i = c; i < wl; ++i) ydiv *= ny;
      const std::uint64_t nyobs = nyw / ydiv;
      std::uint64_t apow = 1;
      for (int i = 0; i < k; ++i) apow *= na;
      std::uint64_t adiv_prefix = 1, adiv_digit = 1;
      for (int i = k; i < L; ++i) adiv_prefix *= na;
      for (int i = k + 1; i < L; ++i) adiv_digit *= na;
      const std::uint64_t keys = nyobs * apow;
      const bool dense = keys * nb <= (std::uint64_t{1} << 24);
      std::vector<double> dmass;
      std::unordered_map<std::uint64_t, std::vector<double>> smass;
      if (dense) dmass.assign(keys * nb, 0.0);
      for (std::uint64_t x = 0; x < nxw; ++x) {
        const std::uint64_t tuple = b.map.table[x];
        const std::uint64_t prefix = tuple / adiv_prefix;
        const int a = static_cast<int>((tuple / adiv_digit) % na);
        for (std::uint64_t y = 0; y < nyw; ++y) {
          const double p = jw(static_cast<int>(x), static_cast<int>(y));
          if (p == 0.0) continue;
          const std::uint64_t key = (y / ydiv) * apow + prefix;
          double* m;
          if (dense) {
            m = &dmass[key * nb];
          } else {
            auto& v = smass[key];
            if (v.empty()) v.assign(nb, 0.0);
            m = v.data();
          }
          for (int c2 = 0; c2 < nb; ++c2) m[c2] += p * g.u(a, c2);
        }
      }
      ResponseRule& rule = rules[t];
      rule.source_start = b.source_start;
      rule.source_length = c;
      rule.opp_start = b.start;
      if (dense) {
        rule.dense.assign(keys, 0);
        for (std::uint64_t key = 0; key < keys; ++key) {
          const int best = argmin_index(&dmass[key * nb], nb);
          rule.dense[key] = best;
          total += dmass[key * nb + best];
        }
      } else {
        for (auto& [key, v] : smass) {
          const int best = argmin_index(v.data(), nb);
          rule.sparse[key] = best;
          total += v[best];
        }
      }
    }
  }
  BestResponse br;
  br.strategy = std::make_shared<ResponseStrategy>(ny, na, nb, responder_noncausal, std::move(rules));
  br.value = total / n;
  return br;
}

inline const BlockCodedStrategy& as_autonomous(const Strategy& s) {
  const auto* b = dynamic_cast<const BlockCodedStrategy*>(&s);
  if (!b || !s.autonomous())
    throw std::invalid_argument("best_response: opponent strategy must be autonomous");
  return *b;
}

}  // namespace detail

// Bob's exact best response to an autonomous Alice strategy. `src` has
// Alice's source as rows and Bob's as columns.
inline BestResponse best_response_b(const StageGame& g, const Strategy& sigma, const JointPmf& src,
                                    std::optional<bool> bob_noncausal = std::nullopt,
                                    const Limits& lim = {}) {
  const BlockCodedStrategy& s = detail::as_autonomous(sigma);
  return detail::column_best_response(g, s, src, bob_noncausal.value_or(s.noncausal()), lim);
}

// Alice's exact best response to an autonomous Bob strategy; value is in u.
inline BestResponse best_response_a(const StageGame& g, const Strategy& tau, const JointPmf& src,
                                    std::optional<bool> alice_noncausal = std::nullopt,
                                    const Limits& lim = {}) {
  const BlockCodedStrategy& s = detail::as_autonomous(tau);
  BestResponse br = detail::column_best_response(g.for_bob(), s, src.transposed(),
                                                 alice_noncausal.value_or(s.noncausal()), lim);
  br.value = -br.value;
  return br;
}

struct PayoffEstimate {
  double mean = 0.0;
  double ci = 0.0;  // 95% half-width; zero for exact evaluation
  bool exact = true;
  std::uint64_t paths = 0;
};

namespace detail {

struct PathSimulator {
  const StageGame& g;
  const Strategy& sigma;
  const Strategy& tau;
  int n;
  std::vector<int> xs, ys, as, bs;

  PathSimulator(const StageGame& game, const Strategy& s, const Strategy& t, int horizon)
      : g(game), sigma(s), tau(t), n(horizon), xs(horizon), ys(horizon), as(horizon), bs(horizon) {}

  std::pair<int, int> step(int t) {
    const std::span<const int> xv(xs), yv(ys), av(as), bv(bs);
    const History ha{sigma.noncausal() ? xv : xv.first(t + 1), av.first(t), bv.first(t)};
    const History hb{tau.noncausal() ? yv : yv.first(t + 1), bv.first(t), av.first(t)};
    as[t] = sigma.act(t, ha);
    bs[t] = tau.act(t, hb);
    if (as[t] < 0 || as[t] >= g.num_a() || bs[t] < 0 || bs[t] >= g.num_b())
      throw std::runtime_error("strategy returned an invalid action");
    return {as[t], bs[t]};
  }

  double run() {
    double s = 0.0;
    for (int t = 0; t < n; ++t) {
      const auto [a, b] = step(t);
      s += g.u(a, b);
    }
    return s / n;
  }
};

inline void check_players(const StageGame& g, const Strategy& s, const Strategy& t, int n) {
  if (s.horizon() != n || t.horizon() != n)
    throw std::invalid_argument("evaluate_payoff: strategy horizon mismatch");
  if (s.num_actions() != g.num_a() || t.num_actions() != g.num_b())
    throw std::invalid_argument("evaluate_payoff: action alphabet mismatch");
}

}  // namespace detail

// Exact expectation over all source paths of positive probability.
inline PayoffEstimate evaluate_payoff_exact(const StageGame& g, const Strategy& sigma,
                                            const Strategy& tau, const JointPmf& src,
                                            const Limits& lim = {}) {
  const int n = sigma.horizon();
  detail::check_players(g, sigma, tau, n);
  std::vector<std::tuple<int, int, double>> supp;
  for (int x = 0; x < src.x_size(); ++x)
    for (int y = 0; y < src.y_size(); ++y)
      if (src(x, y) > 0.0) supp.emplace_back(x, y, src(x, y));
  const std::uint64_t count = checked_pow(supp.size(), n, lim.exact_paths);
  if (count > lim.exact_paths) throw EnumerationOverflow("evaluate_payoff: too many source paths");
  detail::PathSimulator sim(g, sigma, tau, n);
  PayoffEstimate est;
  est.paths = count;
  if (!sigma.noncausal() && !tau.noncausal()) {
    double total = 0.0;
    std::function<void(int, double)> dfs = [&](int t, double p) {
      if (t == n) return;
      for (const auto& [x, y, q] : supp) {
        sim.xs[t] = x;
        sim.ys[t] = y;
        const auto [a, b] = sim.step(t);
        total += p * q * g.u(a, b);
        dfs(t + 1, p * q);
      }
    };
    dfs(0, 1.0);
    est.mean = total / n;
    return est;
  }
  std::vector<int> idx(n, 0);
  double total = 0.0;
  for (std::uint64_t k = 0; k < count; ++k) {
    if (k > 0)
      for (int i = n - 1; i >= 0; --i) {
        if (++idx[i] < static_cast<int>(supp.size())) break;
        idx[i] = 0;
      }
    double p = 1.0;
    for (int t = 0; t < n; ++t) {
      const auto& [x, y, q] = supp[idx[t]];
      sim.xs[t] = x;
      sim.ys[t] = y;
      p *= q;
    }
    total += p * sim.run();
  }
  est.mean = total;
  return est;
}

inline PayoffEstimate evaluate_payoff_mc(const StageGame& g, const Strategy& sigma,
                                         const Strategy& tau, const JointPmf& src, int trials,
                                         Rng& rng) {
  const int n = sigma.horizon();
  detail::check_players(g, sigma, tau, n);
  if (trials < 2) throw std::invalid_argument("evaluate_payoff: need at least two trials");
  const CdfSampler draw(src.flat());
  detail::PathSimulator sim(g, sigma, tau, n);
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < trials; ++k) {
    Rng r = rng.fork(static_cast<std::uint64_t>(k));
    for (int t = 0; t < n; ++t) {
      const int s = draw(r);
      sim.xs[t] = s / src.y_size();
      sim.ys[t] = s % src.y_size();
    }
    const double v = sim.run();
    const double d = v - mean;
    mean += d / (k + 1);
    m2 += d * (v - mean);
  }
  PayoffEstimate est;
  est.exact = false;
  est.mean = mean;
  est.paths = static_cast<std::uint64_t>(trials);
  est.ci = 1.96 * std::sqrt(m2 / (trials - 1)) / std::sqrt(static_cast<double>(trials));
  return est;
}

// Per-stage action law of an autonomous strategy driven by an i.i.d. source.
inline std::vector<Pmf> stage_action_laws(const BlockCodedStrategy& s, const Pmf& px,
                                          const Limits& lim = {}) {
  std::vector<Pmf> out;
  const int na = s.num_actions();
  for (const CodedBlock& b : s.blocks()) {
    if (b.fixed_action >= 0) {
      for (int k = 0; k < b.length; ++k) out.push_back(Pmf::point_mass(na, b.fixed_action));
      continue;
    }
    const Pmf pw = iid_extend(px, b.source_length, lim.pmf_size);
    std::vector<std::vector<double>> laws(b.length, std::vector<double>(na, 0.0));
    for (int x = 0; x < pw.size(); ++x) {
      if (pw[x] == 0.0) continue;
      const auto digits = decode_tuple(b.map.table[x], na, b.length);
      for (int k = 0; k < b.length; ++k) laws[k][digits[k]] += pw[x];
    }
    for (auto& l : laws) out.push_back(Pmf::from_weights(std::move(l)));
  }
  return out;
}

}  // namespace entgame
