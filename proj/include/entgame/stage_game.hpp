#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "entgame/info.hpp"
#include "entgame/lp.hpp"
#include "entgame/prob.hpp"

namespace entgame {

enum class Player { kAlice, kBob };

// Zero-sum stage game; Alice picks rows and maximizes u, Bob minimizes.
class StageGame {
 public:
  StageGame() = default;
  explicit StageGame(const std::vector<std::vector<double>>& payoffs) {
    if (payoffs.empty() || payoffs.front().empty())
      throw std::invalid_argument("StageGame: empty payoff matrix");
    na_ = static_cast<int>(payoffs.size());
    nb_ = static_cast<int>(payoffs.front().size());
    for (const auto& row : payoffs) {
      if (static_cast<int>(row.size()) != nb_)
        throw std::invalid_argument("StageGame: ragged payoff matrix");
      for (double v : row) {
        if (!std::isfinite(v)) throw std::invalid_argument("StageGame: non-finite payoff");
        u_.push_back(v);
      }
    }
  }

  int num_a() const { return na_; }
  int num_b() const { return nb_; }
  double u(int a, int b) const { return u_[static_cast<size_t>(a) * nb_ + b]; }
  double max_abs() const {
    double m = 0.0;
    for (double v : u_) m = std::max(m, std::abs(v));
    return m;
  }
  double max_entry() const { return *std::max_element(u_.begin(), u_.end()); }
  double min_entry() const { return *std::min_element(u_.begin(), u_.end()); }

  // Game seen from Bob as a maximizing row player: u'(b, a) = -u(a, b).
  StageGame for_bob() const {
    std::vector<std::vector<double>> t(nb_, std::vector<double>(na_));
    for (int a = 0; a < na_; ++a)
      for (int b = 0; b < nb_; ++b) t[b][a] = -u(a, b);
    return StageGame(t);
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> r(na_, std::vector<double>(nb_));
    for (int a = 0; a < na_; ++a)
      for (int b = 0; b < nb_; ++b) r[a][b] = u(a, b);
    return r;
  }

 private:
  int na_ = 0, nb_ = 0;
  std::vector<double> u_;
};

inline int num_actions(const StageGame& g, Player p) {
  return p == Player::kAlice ? g.num_a() : g.num_b();
}

inline double security_level(const StageGame& g, Player who, const Pmf& p) {
  if (p.size() != num_actions(g, who))
    throw std::invalid_argument("security_level: pmf size mismatch");
  if (who == Player::kAlice) {
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < g.num_b(); ++b) {
      double s = 0.0;
      for (int a = 0; a < g.num_a(); ++a) s += p[a] * g.u(a, b);
      best = std::min(best, s);
    }
    return best;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.num_a(); ++a) {
    double s = 0.0;
    for (int b = 0; b < g.num_b(); ++b) s += p[b] * g.u(a, b);
    best = std::max(best, s);
  }
  return best;
}

struct MinimaxSolution {
  double value = 0.0;
  Pmf alice;
  Pmf bob;
};

namespace detail {

// max_p min_b sum_a p_a u(a, b) as an LP over (p, v+, v-).
inline Pmf row_player_optimum(const StageGame& g, double* value) {
  const int na = g.num_a();
  LinearProgram lp;
  lp.num_vars = na + 2;
  lp.objective.assign(na + 2, 0.0);
  lp.objective[na] = -1.0;
  lp.objective[na + 1] = 1.0;
  for (int b = 0; b < g.num_b(); ++b) {
    std::vector<double> row(na + 2, 0.0);
    for (int a = 0; a < na; ++a) row[a] = g.u(a, b);
    row[na] = -1.0;
    row[na + 1] = 1.0;
    lp.add_row(row, Relation::kGreaterEq, 0.0);
  }
  std::vector<double> sum(na + 2, 0.0);
  std::fill(sum.begin(), sum.begin() + na, 1.0);
  lp.add_row(sum, Relation::kEqual, 1.0);
  const LpSolution s = solve_lp(lp);
  if (s.status != LpStatus::kOptimal) throw std::runtime_error("minimax LP failed");
  *value = -s.value;
  return Pmf::from_weights(std::vector<double>(s.x.begin(), s.x.begin() + na));
}

}  // namespace detail

inline MinimaxSolution minimax(const StageGame& g) {
  MinimaxSolution m;
  double va = 0.0, vb = 0.0;
  m.alice = detail::row_player_optimum(g, &va);
  m.bob = detail::row_player_optimum(g.for_bob(), &vb);
  m.value = va;
  if (std::abs(va + vb) > 1e-8)
    throw std::runtime_error("minimax: primal and dual values disagree");
  return m;
}

struct ConstrainedSecurity {
  double value = 0.0;
  Pmf argmax;
};

namespace detail {

inline double binary_entropy(double p) {
  return shannon_entropy(std::vector<double>{p, 1.0 - p});
}

// Smallest p in [0, 1/2] with binary entropy h.
inline double inverse_binary_entropy(double h) {
  if (h <= 0.0) return 0.0;
  if (h >= 1.0) return 0.5;
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    (binary_entropy(mid) < h ? lo : hi) = mid;
  }
  return lo;
}

// Exact solution for two row actions.
inline ConstrainedSecurity two_action_security(const StageGame& g, double h) {
  auto U = [&](double p) {
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < g.num_b(); ++b)
      best = std::min(best, p * g.u(0, b) + (1.0 - p) * g.u(1, b));
    return best;
  };
  std::vector<double> cand{0.0, 1.0};
  for (int b = 0; b < g.num_b(); ++b)
    for (int c = b + 1; c < g.num_b(); ++c) {
      const double sb = g.u(0, b) - g.u(1, b), sc = g.u(0, c) - g.u(1, c);
      if (sb == sc) continue;
      const double p = (g.u(1, c) - g.u(1, b)) / (sb - sc);
      if (p > 0.0 && p < 1.0) cand.push_back(p);
    }
  double vstar = -std::numeric_limits<double>::infinity();
  for (double p : cand) vstar = std::max(vstar, U(p));
  double pl = 1.0, pr = 0.0;
  for (double p : cand)
    if (U(p) >= vstar - 1e-12) {
      pl = std::min(pl, p);
      pr = std::max(pr, p);
    }
  const double pmin = binary_entropy(pl) <= binary_entropy(pr) ? pl : pr;
  auto pmf = [](double p) { return Pmf::from_weights({p, 1.0 - p}); };
  if (binary_entropy(pmin) <= h + 1e-15) return {U(pmin), pmf(pmin)};
  const double ph = inverse_binary_entropy(h);
  const double lo = U(ph), hi = U(1.0 - ph);
  return lo >= hi ? ConstrainedSecurity{lo, pmf(ph)} : ConstrainedSecurity{hi, pmf(1.0 - ph)};
}

inline void simplex_grid(int k, int res, std::vector<int>& cur, int left,
                         std::vector<std::vector<double>>& out) {
  if (static_cast<int>(cur.size()) == k - 1) {
    std::vector<double> p;
    for (int c : cur) p.push_back(static_cast<double>(c) / res);
    p.push_back(static_cast<double>(left) / res);
    out.push_back(std::move(p));
    return;
  }
  for (int c = 0; c <= left; ++c) {
    cur.push_back(c);
    simplex_grid(k, res, cur, left - c, out);
    cur.pop_back();
  }
}

inline int default_resolution(int k) {
  int res = 1;
  for (int r = 1; r <= 400; ++r) {
    double count = 1.0;
    for (int i = 1; i < k; ++i) count = count * (r + i) / i;
    if (count > 20000.0) break;
    res = r;
  }
  return res;
}

// Grid over the simplex plus pairwise mass-transfer pattern search.
class GridSecurity {
 public:
  GridSecurity(const StageGame& g, int resolution) : g_(g) {
    res_ = resolution > 0 ? resolution : default_resolution(g.num_a());
    std::vector<int> cur;
    simplex_grid(g.num_a(), res_, cur, res_, pts_);
    for (int a = 0; a < g.num_a(); ++a) {
      std::vector<double> e(g.num_a(), 0.0);
      e[a] = 1.0;
      pts_.push_back(e);
    }
    double v = 0.0;
    q_ = detail::row_player_optimum(g, &v).probs();
    pts_.push_back(q_);
    for (const auto& p : pts_) {
      hs_.push_back(shannon_entropy(p));
      us_.push_back(U(p));
    }
  }

  double U(const std::vector<double>& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < g_.num_b(); ++b) {
      double s = 0.0;
      for (int a = 0; a < g_.num_a(); ++a) s += p[a] * g_.u(a, b);
      best = std::min(best, s);
    }
    return best;
  }

  ConstrainedSecurity solve(double h) const {
    const int k = g_.num_a();
    std::vector<double> best;
    double bu = -std::numeric_limits<double>::infinity();
    auto offer = [&](const std::vector<double>& p, double u) {
      if (u > bu + 1e-15) {
        bu = u;
        best = p;
      }
    };
    for (size_t i = 0; i < pts_.size(); ++i)
      if (hs_[i] <= h + 1e-15) offer(pts_[i], us_[i]);
    // Segments from each pure action towards the minimax strategy.
    for (int a = 0; a < k; ++a) {
      auto mix = [&](double t) {
        std::vector<double> p(k);
        for (int i = 0; i < k; ++i) p[i] = t * q_[i] + (i == a ? 1.0 - t : 0.0);
        return p;
      };
      double lo = 0.0, hi = 1.0;
      if (shannon_entropy(mix(1.0)) <= h) {
        lo = 1.0;
      } else {
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          (shannon_entropy(mix(mid)) <= h ? lo : hi) = mid;
        }
      }
      const auto p = mix(lo);
      offer(p, U(p));
    }
    std::vector<double> p = best;
    double up = bu;
    double step = 1.0 / res_;
    for (int iter = 0; iter < 20000 && step > 1e-12; ++iter) {
      bool improved = false;
      for (int i = 0; i < k && !improved; ++i)
        for (int j = 0; j < k && !improved; ++j) {
          if (i == j || p[i] <= 0.0) continue;
          std::vector<double> q = p;
          const double m = std::min(step, q[i]);
          q[i] -= m;
          q[j] += m;
          if (shannon_entropy(q) > h + 1e-15) continue;
          const double uq = U(q);
          if (uq > up + 1e-15) {
            p = std::move(q);
            up = uq;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    return {up, Pmf::from_weights(p)};
  }

 private:
  const StageGame& g_;
  int res_;
  std::vector<std::vector<double>> pts_;
  std::vector<double> hs_, us_;
  std::vector<double> q_;
};

inline ConstrainedSecurity alice_security(const StageGame& g, double h, int resolution) {
  if (g.num_a() == 1) return {security_level(g, Player::kAlice, Pmf({1.0})), Pmf({1.0})};
  if (g.num_a() == 2) return two_action_security(g, h);
  return GridSecurity(g, resolution).solve(h);
}

}  // namespace detail

// J(h): best security level over mixed actions with entropy at most h.
inline ConstrainedSecurity entropy_constrained_security(const StageGame& g, Player who,
                                                        double h, int resolution = 0) {
  if (h < 0.0 || !std::isfinite(h))
    throw std::invalid_argument("entropy_constrained_security: h must be >= 0");
  if (who == Player::kAlice) return detail::alice_security(g, h, resolution);
  ConstrainedSecurity c = detail::alice_security(g.for_bob(), h, resolution);
  c.value = -c.value;
  return c;
}

struct SecurityCurve {
  Player player = Player::kAlice;
  std::vector<double> h;
  std::vector<double> j;
  std::vector<double> envelope;
  std::vector<Pmf> argmax;
  std::vector<int> hull;  // grid indices of envelope vertices

  double max_h() const { return h.back(); }

  // Envelope at x, in the player's own payoff sign.
  double value_at(double x) const {
    x = std::clamp(x, 0.0, max_h());
    for (size_t s = 0; s + 1 < hull.size(); ++s) {
      const int i = hull[s], k = hull[s + 1];
      if (x <= h[k] || s + 2 == hull.size()) {
        if (h[k] <= h[i]) return std::max(j[i], j[k]);
        const double t = (x - h[i]) / (h[k] - h[i]);
        return j[i] + std::clamp(t, 0.0, 1.0) * (j[k] - j[i]);
      }
    }
    return j[hull.front()];
  }
};

// Upper concave hull for Alice, lower convex hull for Bob.
inline SecurityCurve security_curve(const StageGame& g, Player who, int grid = 513,
                                    int resolution = 0) {
  if (grid < 2) throw std::invalid_argument("security_curve: grid must be >= 2");
  const StageGame row = who == Player::kAlice ? g : g.for_bob();
  const double hmax = std::log2(row.num_a());
  SecurityCurve c;
  c.player = who;
  std::optional<detail::GridSecurity> solver;
  if (row.num_a() > 2) solver.emplace(row, resolution);
  for (int k = 0; k < grid; ++k) {
    const double h = k == grid - 1 ? hmax : hmax * k / (grid - 1);
    ConstrainedSecurity s = solver ? solver->solve(h) : detail::alice_security(row, h, resolution);
    if (k > 0 && s.value < c.j.back()) s = {c.j.back(), c.argmax.back()};
    c.h.push_back(h);
    c.j.push_back(s.value);
    c.argmax.push_back(s.argmax);
  }
  if (grid > 1 && hmax == 0.0)
    for (int k = 0; k < grid; ++k) c.h[k] = 0.0;
  // Monotone chain on the (h, J) points of the row-player game.
  std::vector<int> hull;
  for (int k = 0; k < grid; ++k) {
    if (!hull.empty() && c.h[k] == c.h[hull.back()]) {
      if (c.j[k] >= c.j[hull.back()]) hull.back() = k;
      continue;
    }
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double cross = (c.h[b] - c.h[a]) * (c.j[k] - c.j[a]) -
                           (c.j[b] - c.j[a]) * (c.h[k] - c.h[a]);
      if (cross >= -1e-15) hull.pop_back();
      else break;
    }
    hull.push_back(k);
  }
  c.hull = hull;
  if (hull.size() == 1) c.hull.push_back(hull.front());
  for (int k = 0; k < grid; ++k) c.envelope.push_back(c.value_at(c.h[k]));
  if (who == Player::kBob) {
    for (double& v : c.j) v = -v;
    for (double& v : c.envelope) v = -v;
  }
  return c;
}

inline double envelope_value(const SecurityCurve& c, double h) { return c.value_at(h); }

struct EnvelopeDecomposition {
  double h = 0.0;
  double r = 0.0;
  Pmf p1;
  Pmf p2;
  double u1 = 0.0;
  double u2 = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double value_at_h = 0.0;
  double envelope_value = 0.0;
  bool trivial = false;
  int trivial_action = 0;
};

namespace detail {

inline int best_pure_action(const StageGame& row) {
  int best = 0;
  double bv = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < row.num_a(); ++a) {
    const double v = security_level(row, Player::kAlice, Pmf::point_mass(row.num_a(), a));
    if (v > bv + 1e-15) {
      bv = v;
      best = a;
    }
  }
  return best;
}

inline int support_action(const Pmf& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

// Decomposition for the maximizing row player of `row`.
inline EnvelopeDecomposition row_decomposition(const StageGame& row, double h,
                                               const JointPmf& source, int grid) {
  const SecurityCurve c = security_curve(row, Player::kAlice, grid);
  const double hx = std::clamp(h, 0.0, c.max_h());
  EnvelopeDecomposition d;
  d.h = hx;
  d.envelope_value = c.value_at(hx);
  const auto& hull = c.hull;

  struct Seg { Pmf hi, lo; };
  std::vector<Seg> segs;
  for (size_t s = 0; s + 1 < hull.size(); ++s) {
    const int i = hull[s], k = hull[s + 1];
    if (hx < c.h[i] - 1e-12 || hx > c.h[k] + 1e-12) continue;
    segs.push_back({c.argmax[k], c.argmax[i]});
  }
  if (segs.empty()) segs.push_back({c.argmax[hull.back()], c.argmax[hull.front()]});
  auto beta_of = [](const Seg& s) { return shannon_entropy(s.hi) - shannon_entropy(s.lo); };
  Seg seg = segs.front();
  for (const Seg& s : segs)
    if (beta_of(s) > beta_of(seg) + 1e-15) seg = s;

  Pmf p1 = seg.hi, p2 = seg.lo;
  if (shannon_entropy(p1) < shannon_entropy(p2)) std::swap(p1, p2);
  const int na = row.num_a();
  const Pmf best_det = Pmf::point_mass(na, best_pure_action(row));
  auto U = [&](const Pmf& p) { return security_level(row, Player::kAlice, p); };
  double h1 = shannon_entropy(p1), h2 = shannon_entropy(p2);
  double r;
  if (h1 - h2 <= 1e-15) {
    if (h1 <= 1e-15) {
      d.trivial = true;
      d.trivial_action = U(p1) >= U(p2) ? support_action(p1) : support_action(p2);
    } else {
      if (U(p2) > U(p1)) p1 = p2;
      p2 = best_det;
    }
    r = 1.0;
  } else {
    r = std::clamp((hx - h2) / (h1 - h2), 0.0, 1.0);
    if (r <= 0.0) {
      if (h2 <= 1e-15) {
        d.trivial = true;
        d.trivial_action = support_action(p2);
      } else {
        p1 = p2;
        p2 = best_det;
        r = 1.0;
      }
    }
  }
  if (d.trivial) {
    const Pmf det = Pmf::point_mass(na, d.trivial_action);
    d.p1 = det;
    d.p2 = det;
    d.r = 0.0;
    d.u1 = d.u2 = U(det);
    d.value_at_h = d.u1;
    return d;
  }
  h1 = shannon_entropy(p1);
  h2 = shannon_entropy(p2);
  d.p1 = p1;
  d.p2 = p2;
  d.r = r;
  d.u1 = U(p1);
  d.u2 = U(p2);
  d.beta = h1 - h2;
  d.value_at_h = r * d.u1 + (1.0 - r) * d.u2;
  const TaylorCoeffs ts = taylor_coeffs(source);
  const TaylorCoeffs t1 = taylor_coeffs(p1), t2 = taylor_coeffs(p2);
  d.gamma = 2.0 * std::max(ts.d1 + std::max(t1.d1, t2.d1), ts.d2 + std::max(t1.d2, t2.d2));
  d.mu = std::max(2.0 * row.max_abs(), std::abs(d.u1 - d.u2));
  return d;
}

}  // namespace detail

// `source` has the player's own source as rows and the opponent's as columns.
inline EnvelopeDecomposition envelope_decomposition(const StageGame& g, Player who, double h,
                                                    const JointPmf& source, int grid = 513) {
  if (who == Player::kAlice) {
    if (source.x_size() < 1) throw std::invalid_argument("envelope_decomposition: bad source");
    return detail::row_decomposition(g, h, source, grid);
  }
  EnvelopeDecomposition d = detail::row_decomposition(g.for_bob(), h, source, grid);
  d.u1 = -d.u1;
  d.u2 = -d.u2;
  d.value_at_h = -d.value_at_h;
  d.envelope_value = -d.envelope_value;
  return d;
}

}  // namespace entgame
