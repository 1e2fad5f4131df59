#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entgame/error.hpp"
#include "entgame/info.hpp"
#include "entgame/lp.hpp"
#include "entgame/repeated_game.hpp"
#include "entgame/stage_game.hpp"
#include "entgame/strategy.hpp"
#include "json.hpp"

namespace entgame {

inline constexpr int kNumStates = 4;

struct AutonomousCertificate {
  Pmf p_q;
  std::vector<Pmf> a_given_q;
  std::vector<Pmf> b_given_q;
  double g_a = 0.0;
  double g_b = 0.0;
  double h_a = 0.0;
  double h_b = 0.0;
  double value = 0.0;  // Σ_q p(q) E[u | q]

  nlohmann::json to_json() const {
    auto rows = [](const std::vector<Pmf>& v) {
      nlohmann::json j = nlohmann::json::array();
      for (const Pmf& p : v) j.push_back(p.probs());
      return j;
    };
    return {{"p_q", p_q.probs()}, {"p_a_given_q", rows(a_given_q)}, {"p_b_given_q", rows(b_given_q)},
            {"g_a", g_a},         {"g_b", g_b},                     {"h_a", h_a},
            {"h_b", h_b},         {"value", value}};
  }
};

namespace detail {

inline double mixed_payoff(const StageGame& g, const Pmf& pa, const Pmf& pb) {
  double s = 0.0;
  for (int a = 0; a < g.num_a(); ++a)
    for (int b = 0; b < g.num_b(); ++b) s += pa[a] * pb[b] * g.u(a, b);
  return s;
}

inline void check_certificate_shape(const StageGame& g, const AutonomousCertificate& c) {
  if (c.p_q.size() != kNumStates || static_cast<int>(c.a_given_q.size()) != kNumStates ||
      static_cast<int>(c.b_given_q.size()) != kNumStates)
    throw std::invalid_argument("certificate: Q must have 4 states");
  for (int q = 0; q < kNumStates; ++q)
    if (c.a_given_q[q].size() != g.num_a() || c.b_given_q[q].size() != g.num_b())
      throw std::invalid_argument("certificate: table shape mismatch");
}

}  // namespace detail

// Per-state expected regrets of each player against the other's conditional law.
inline std::pair<double, double> g_values(const StageGame& g, const AutonomousCertificate& c) {
  detail::check_certificate_shape(g, c);
  double ga = 0.0, gb = 0.0;
  for (int q = 0; q < kNumStates; ++q) {
    if (c.p_q[q] == 0.0) continue;
    const Pmf& pa = c.a_given_q[q];
    const Pmf& pb = c.b_given_q[q];
    const double e = detail::mixed_payoff(g, pa, pb);
    double best_a = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.num_a(); ++a)
      best_a = std::max(best_a, detail::mixed_payoff(g, Pmf::point_mass(g.num_a(), a), pb));
    double best_b = std::numeric_limits<double>::infinity();
    for (int b = 0; b < g.num_b(); ++b)
      best_b = std::min(best_b, detail::mixed_payoff(g, pa, Pmf::point_mass(g.num_b(), b)));
    ga += c.p_q[q] * std::max(0.0, best_a - e);
    gb += c.p_q[q] * std::max(0.0, e - best_b);
  }
  return {ga, gb};
}

// Recomputes every derived field from the tables.
inline AutonomousCertificate finalize_certificate(const StageGame& g, AutonomousCertificate c) {
  std::tie(c.g_a, c.g_b) = g_values(g, c);
  c.h_a = c.h_b = c.value = 0.0;
  for (int q = 0; q < kNumStates; ++q) {
    c.h_a += c.p_q[q] * shannon_entropy(c.a_given_q[q]);
    c.h_b += c.p_q[q] * shannon_entropy(c.b_given_q[q]);
    c.value += c.p_q[q] * detail::mixed_payoff(g, c.a_given_q[q], c.b_given_q[q]);
  }
  return c;
}

// Largest violation of the four achievability conditions.
inline double certificate_violation(const StageGame& g, const AutonomousCertificate& c, double h_x,
                                    double h_y, double eps_a, double eps_b) {
  const AutonomousCertificate f = finalize_certificate(g, c);
  return std::max({f.h_a - h_x, f.h_b - h_y, f.g_a - eps_a, f.g_b - eps_b, 0.0});
}

inline constexpr double kCertificateTolerance = 1e-9;

struct DegenerateVerdict {
  bool feasible = false;
  double min_excess = 0.0;    // min over certificates of max(g_A − ε_A, g_B − ε_B)
  double min_gain_sum = 0.0;  // min over certificates of g_A + g_B
  AutonomousCertificate certificate;  // attains min_excess
  int atoms = 0;
};

namespace detail {

// Solves a small dense system; false when singular.
inline bool solve_dense(std::vector<std::vector<double>> m, std::vector<double> rhs,
                        std::vector<double>& x) {
  const int n = static_cast<int>(rhs.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-12) return false;
    std::swap(m[piv], m[c]);
    std::swap(rhs[piv], rhs[c]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  x.resize(n);
  for (int r = 0; r < n; ++r) x[r] = rhs[r] / m[r][r];
  return true;
}

// Vertices of the arrangement cut on the column simplex by the indifference
// hyperplanes of the row player, plus an optional grid.
inline std::vector<std::vector<double>> arrangement_points(const StageGame& g, int resolution,
                                                           std::uint64_t limit) {
  const int na = g.num_a(), nb = g.num_b();
  std::vector<std::vector<double>> planes;
  for (int a = 0; a < na; ++a)
    for (int c = a + 1; c < na; ++c) {
      std::vector<double> h(nb);
      for (int b = 0; b < nb; ++b) h[b] = g.u(a, b) - g.u(c, b);
      planes.push_back(std::move(h));
    }
  for (int b = 0; b < nb; ++b) {
    std::vector<double> h(nb, 0.0);
    h[b] = 1.0;
    planes.push_back(std::move(h));
  }
  const int total = static_cast<int>(planes.size()), pick = nb - 1;
  double combos = 1.0;
  for (int k = 0; k < pick; ++k) combos = combos * (total - k) / (k + 1);
  if (combos > static_cast<double>(limit))
    throw EnumerationOverflow("arrangement_points: too many hyperplane subsets");

  std::vector<std::vector<double>> out;
  auto add = [&](std::vector<double> p) {
    for (double& v : p) v = std::max(0.0, v);
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
    for (const auto& q : out) {
      double d = 0.0;
      for (int b = 0; b < nb; ++b) d = std::max(d, std::abs(q[b] - p[b]));
      if (d < 1e-12) return;
    }
    out.push_back(std::move(p));
  };
  std::vector<int> idx(pick);
  for (int k = 0; k < pick; ++k) idx[k] = k;
  while (true) {
    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (int k : idx) {
      m.push_back(planes[k]);
      rhs.push_back(0.0);
    }
    m.push_back(std::vector<double>(nb, 1.0));
    rhs.push_back(1.0);
    std::vector<double> x;
    if (solve_dense(m, rhs, x) && *std::min_element(x.begin(), x.end()) >= -1e-12) add(x);
    int k = pick - 1;
    while (k >= 0 && idx[k] == total - pick + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (resolution > 0) {
    std::vector<std::vector<double>> grid;
    std::vector<int> cur;
    simplex_grid(nb, resolution, cur, resolution, grid);
    for (auto& p : grid) add(std::move(p));
  }
  return out;
}

struct Atom {
  int a;
  std::vector<double> beta;
  double ga, gb, h;
};

}  // namespace detail

// Exact decision when the row player's source has zero entropy: the row
// player is then deterministic given Q, and per-state regrets are piecewise
// linear in the column law while entropy is concave, so optimal atoms sit on
// arrangement vertices and a linear program over atom weights is exact.
inline DegenerateVerdict autonomous_feasible_degenerate(const StageGame& g, double h_x, double h_y,
                                                        double eps_a, double eps_b,
                                                        int resolution = 0,
                                                        std::uint64_t limit = 1u << 20) {
  if (h_x < 0.0 || h_y < 0.0) throw std::invalid_argument("autonomous: negative entropy");
  if (h_x != 0.0) {
    if (h_y != 0.0) throw std::invalid_argument("autonomous_feasible_degenerate: needs a zero-entropy side");
    // Swap roles: the column player becomes the deterministic row player.
    DegenerateVerdict v = autonomous_feasible_degenerate(g.for_bob(), 0.0, h_x, eps_b, eps_a, resolution, limit);
    AutonomousCertificate& c = v.certificate;
    std::swap(c.a_given_q, c.b_given_q);
    v.certificate = finalize_certificate(g, c);
    return v;
  }
  const int na = g.num_a(), nb = g.num_b();
  std::vector<detail::Atom> atoms;
  for (const auto& beta : detail::arrangement_points(g, resolution, limit)) {
    const Pmf pb(beta);
    std::vector<double> ua(na);
    for (int a = 0; a < na; ++a) ua[a] = detail::mixed_payoff(g, Pmf::point_mass(na, a), pb);
    const double best = *std::max_element(ua.begin(), ua.end());
    for (int a = 0; a < na; ++a) {
      double worst = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nb; ++b) worst = std::min(worst, g.u(a, b));
      atoms.push_back({a, beta, best - ua[a], ua[a] - worst, shannon_entropy(pb)});
    }
  }
  const int k = static_cast<int>(atoms.size());

  auto base = [&](int extra) {
    LinearProgram lp;
    lp.num_vars = k + extra;
    lp.objective.assign(k + extra, 0.0);
    std::vector<double> one(k, 1.0), ent(k);
    for (int i = 0; i < k; ++i) ent[i] = atoms[i].h;
    lp.add_row(one, Relation::kEqual, 1.0);
    lp.add_row(ent, Relation::kLessEq, h_y);
    return lp;
  };

  // Excess program: minimize t = tp − tm subject to both regret budgets.
  LinearProgram lp = base(2);
  lp.objective[k] = 1.0;
  lp.objective[k + 1] = -1.0;
  std::vector<double> ra(k + 2), rb(k + 2);
  for (int i = 0; i < k; ++i) {
    ra[i] = atoms[i].ga;
    rb[i] = atoms[i].gb;
  }
  ra[k] = rb[k] = -1.0;
  ra[k + 1] = rb[k + 1] = 1.0;
  lp.add_row(ra, Relation::kLessEq, eps_a);
  lp.add_row(rb, Relation::kLessEq, eps_b);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) throw std::logic_error("degenerate LP did not solve");

  LinearProgram sum = base(0);
  for (int i = 0; i < k; ++i) sum.objective[i] = atoms[i].ga + atoms[i].gb;
  const LpSolution ssol = solve_lp(sum);
  if (ssol.status != LpStatus::kOptimal) throw std::logic_error("degenerate LP did not solve");

  DegenerateVerdict v;
  v.min_excess = sol.value;
  v.min_gain_sum = ssol.value;
  v.feasible = sol.value <= kCertificateTolerance;
  std::vector<int> used;
  for (int i = 0; i < k; ++i)
    if (sol.x[i] > 1e-13) used.push_back(i);
  if (used.size() > kNumStates) throw std::logic_error("degenerate LP: non-basic solution");
  v.atoms = static_cast<int>(used.size());
  AutonomousCertificate c;
  std::vector<double> pq(kNumStates, 0.0);
  for (int q = 0; q < kNumStates; ++q) {
    if (q < v.atoms) {
      const detail::Atom& at = atoms[used[q]];
      pq[q] = sol.x[used[q]];
      c.a_given_q.push_back(Pmf::point_mass(na, at.a));
      c.b_given_q.push_back(Pmf(at.beta));
    } else {
      c.a_given_q.push_back(Pmf::point_mass(na, 0));
      c.b_given_q.push_back(Pmf::point_mass(nb, 0));
    }
  }
  c.p_q = Pmf::from_weights(pq);
  v.certificate = finalize_certificate(g, c);
  return v;
}

struct AutonomousSearch {
  int restarts = 64;
  int steps = 500;
  double step_size = 0.5;
  double margin = 1e-7;
  int degenerate_resolution = 0;
};

struct FeasibilityResult {
  std::optional<AutonomousCertificate> certificate;
  double best_violation = std::numeric_limits<double>::infinity();
  std::string status;  // "found" or "not-found-at-resolution"
  std::string origin;  // seed or restart that produced the certificate
};

namespace detail {

struct Logits {
  int na, nb;
  bool hard_a, hard_b;  // zero-entropy sides decode to their argmax
  std::vector<double> theta;

  static Pmf softmax(const double* z, int k, bool hard) {
    std::vector<double> w(k, 0.0);
    if (hard) {
      w[std::max_element(z, z + k) - z] = 1.0;
      return Pmf(w);
    }
    const double m = *std::max_element(z, z + k);
    for (int i = 0; i < k; ++i) w[i] = std::exp(z[i] - m);
    return Pmf::from_weights(std::move(w));
  }

  AutonomousCertificate decode() const {
    AutonomousCertificate c;
    c.p_q = softmax(theta.data(), kNumStates, false);
    for (int q = 0; q < kNumStates; ++q) {
      c.a_given_q.push_back(softmax(theta.data() + kNumStates + q * na, na, hard_a));
      c.b_given_q.push_back(softmax(theta.data() + kNumStates + kNumStates * na + q * nb, nb, hard_b));
    }
    return c;
  }
};

inline AutonomousCertificate single_state(int na, int nb, const Pmf& pa, const Pmf& pb) {
  AutonomousCertificate c;
  c.p_q = Pmf::point_mass(kNumStates, 0);
  for (int q = 0; q < kNumStates; ++q) {
    c.a_given_q.push_back(q == 0 ? pa : Pmf::point_mass(na, 0));
    c.b_given_q.push_back(q == 0 ? pb : Pmf::point_mass(nb, 0));
  }
  return c;
}

}  // namespace detail

// One-sided search: a returned certificate is verified from scratch, while
// not-found says nothing about infeasibility.
inline FeasibilityResult autonomous_feasible(const StageGame& g, double h_x, double h_y, double eps_a,
                                             double eps_b, Rng& rng, const AutonomousSearch& cfg = {}) {
  if (h_x < 0.0 || h_y < 0.0) throw std::invalid_argument("autonomous: negative entropy");
  const int na = g.num_a(), nb = g.num_b();
  FeasibilityResult res;
  res.status = "not-found-at-resolution";
  auto offer = [&](const AutonomousCertificate& c, const std::string& origin) {
    const double viol = certificate_violation(g, c, h_x, h_y, eps_a, eps_b);
    res.best_violation = std::min(res.best_violation, viol);
    if (viol > kCertificateTolerance) return false;
    res.certificate = finalize_certificate(g, c);
    res.status = "found";
    res.origin = origin;
    return true;
  };

  const MinimaxSolution mm = minimax(g);
  if (offer(detail::single_state(na, nb, mm.alice, mm.bob), "minimax")) return res;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b)
      if (offer(detail::single_state(na, nb, Pmf::point_mass(na, a), Pmf::point_mass(nb, b)),
                "pure(" + std::to_string(a) + "," + std::to_string(b) + ")"))
        return res;
  if (h_x == 0.0 || h_y == 0.0) {
    const DegenerateVerdict v =
        autonomous_feasible_degenerate(g, h_x, h_y, eps_a, eps_b, cfg.degenerate_resolution);
    if (offer(v.certificate, "degenerate")) return res;
  }

  const double ta = eps_a > cfg.margin ? eps_a - cfg.margin : eps_a;
  const double tb = eps_b > cfg.margin ? eps_b - cfg.margin : eps_b;
  const double tx = h_x > cfg.margin ? h_x - cfg.margin : h_x;
  const double ty = h_y > cfg.margin ? h_y - cfg.margin : h_y;
  auto penalty = [&](const detail::Logits& l) {
    const AutonomousCertificate c = finalize_certificate(g, l.decode());
    return std::max(0.0, c.h_a - tx) + std::max(0.0, c.h_b - ty) + std::max(0.0, c.g_a - ta) +
           std::max(0.0, c.g_b - tb);
  };
  const int dim = kNumStates * (1 + na + nb);
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng child = rng.fork(static_cast<std::uint64_t>(r));
    detail::Logits l{na, nb, h_x == 0.0, h_y == 0.0, std::vector<double>(dim)};
    for (double& t : l.theta) t = 4.0 * child.uniform() - 2.0;
    const std::string origin = "restart " + std::to_string(r);
    for (int s = 0; s < cfg.steps; ++s) {
      if (offer(l.decode(), origin)) return res;
      std::vector<double> grad(dim);
      double norm = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double keep = l.theta[i];
        l.theta[i] = keep + 1e-6;
        const double up = penalty(l);
        l.theta[i] = keep - 1e-6;
        const double down = penalty(l);
        l.theta[i] = keep;
        grad[i] = (up - down) / 2e-6;
        norm += grad[i] * grad[i];
      }
      if (norm == 0.0) break;
      const double step = cfg.step_size * (1.0 - static_cast<double>(s) / cfg.steps) + 1e-3;
      for (int i = 0; i < dim; ++i) l.theta[i] -= step * grad[i] / std::sqrt(norm);
    }
    if (offer(l.decode(), origin)) return res;
  }
  return res;
}

struct SubblockPlan {
  int n = 0;
  std::array<std::pair<int, int>, kNumStates> intervals{};  // [begin, end)
  std::vector<int> state;                                   // Q at each position
};

// Interval q has length ⌈p(q)·n⌉, clipped to the block; the last runs to n.
inline SubblockPlan subblock_plan(const Pmf& p_q, int n) {
  if (p_q.size() != kNumStates || n < 1) throw std::invalid_argument("subblock_plan: bad input");
  SubblockPlan plan;
  plan.n = n;
  int at = 0;
  for (int q = 0; q < kNumStates; ++q) {
    const int len = q + 1 < kNumStates ? static_cast<int>(std::ceil(p_q[q] * n - 1e-9)) : n - at;
    const int end = std::min(n, at + std::max(0, len));
    plan.intervals[q] = {at, end};
    for (int t = at; t < end; ++t) plan.state.push_back(q);
    at = end;
  }
  return plan;
}

struct AutonomousProfile {
  std::shared_ptr<BlockCodedStrategy> alice;
  std::shared_ptr<BlockCodedStrategy> bob;
  SubblockPlan plan;
  double tv_a = 0.0;
  double tv_b = 0.0;
  double plan_value = 0.0;  // block-average payoff of the ideal plan

  double delta() const { return std::max(tv_a, tv_b); }
};

namespace detail {

inline bool deterministic_side(const std::vector<Pmf>& tables, const Pmf& p_q) {
  for (int q = 0; q < kNumStates; ++q)
    if (p_q[q] > 0.0 && !tables[q].is_deterministic()) return false;
  return true;
}

inline std::shared_ptr<BlockCodedStrategy> subblock_strategy(const Pmf& px, const std::vector<Pmf>& tables,
                                                             const SubblockPlan& plan, int blocks,
                                                             Rng& rng, const BuildOptions& opt,
                                                             double& tv) {
  const int n = plan.n, na = tables[0].size();
  std::vector<Pmf> factors;
  for (int t = 0; t < n; ++t) factors.push_back(tables[plan.state[t]]);
  const Pmf target = product_pmf(factors, opt.limits.pmf_size);
  CodedBlock first;
  first.start = 0;
  first.length = n;
  first.fixed_action = static_cast<int>(
      std::max_element(factors[0].probs().begin(), factors[0].probs().end()) - factors[0].probs().begin());
  std::vector<CodedBlock> out{first};
  tv = 0.0;
  if (blocks > 1) {
    const JointPmf src = JointPmf::independent(px, Pmf({1.0}));
    const CodedBlock proto = coded_block(src, target, 0, n, 0, n, 0, rng, opt);
    tv = proto.tv;
    for (int i = 1; i < blocks; ++i) {
      CodedBlock b = proto;
      b.start = i * n;
      b.source_start = (i - 1) * n;
      out.push_back(std::move(b));
    }
  }
  return std::make_shared<BlockCodedStrategy>(n * blocks, px.size(), na, std::move(out));
}

}  // namespace detail

// Blocks of length n, `blocks` of them. Each player maps its previous block of
// source symbols onto the subblock product law of its certificate tables.
inline AutonomousProfile build_autonomous_profile(const StageGame& g, const Pmf& p_x, const Pmf& p_y,
                                                  const AutonomousCertificate& cert, int n, int blocks,
                                                  Rng& rng, const BuildOptions& opt = {}) {
  detail::check_certificate_shape(g, cert);
  if (n < 1 || blocks < 1) throw std::invalid_argument("build_autonomous_profile: bad sizes");
  const AutonomousCertificate c = finalize_certificate(g, cert);
  const bool det_a = detail::deterministic_side(c.a_given_q, c.p_q);
  const bool det_b = detail::deterministic_side(c.b_given_q, c.p_q);
  if ((!det_a && !(c.h_a < shannon_entropy(p_x))) || (!det_b && !(c.h_b < shannon_entropy(p_y))))
    throw NotConstructible("build_autonomous_profile: zero entropy slack");
  AutonomousProfile prof;
  prof.plan = subblock_plan(c.p_q, n);
  Rng ra = rng.fork(0), rb = rng.fork(1);
  prof.alice = detail::subblock_strategy(p_x, c.a_given_q, prof.plan, blocks, ra, opt, prof.tv_a);
  prof.bob = detail::subblock_strategy(p_y, c.b_given_q, prof.plan, blocks, rb, opt, prof.tv_b);
  for (int t = 0; t < n; ++t) {
    const int q = prof.plan.state[t];
    prof.plan_value += detail::mixed_payoff(g, c.a_given_q[q], c.b_given_q[q]) / n;
  }
  return prof;
}

// Exact payoff of two autonomous strategies driven by independent sources.
inline double independent_autonomous_payoff(const StageGame& g, const BlockCodedStrategy& a,
                                            const BlockCodedStrategy& b, const Pmf& p_x,
                                            const Pmf& p_y, const Limits& lim = {}) {
  const auto la = stage_action_laws(a, p_x, lim), lb = stage_action_laws(b, p_y, lim);
  if (la.size() != lb.size()) throw std::invalid_argument("horizon mismatch");
  double s = 0.0;
  for (size_t t = 0; t < la.size(); ++t) s += detail::mixed_payoff(g, la[t], lb[t]);
  return s / static_cast<double>(la.size());
}

}  // namespace entgame
