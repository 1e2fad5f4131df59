#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "entgame/stage_game.hpp"
#include "test_util.hpp"

namespace entgame {
namespace {

using testing::random_int;

const StageGame kPennies({{1.0, -1.0}, {-1.0, 1.0}});

StageGame random_game(Rng& rng, int na, int nb) {
  std::vector<std::vector<double>> u(na, std::vector<double>(nb));
  for (auto& row : u)
    for (double& v : row) v = std::round(8.0 * (2.0 * rng.uniform() - 1.0)) / 4.0;
  return StageGame(u);
}

// Brute-force max over a fine simplex grid of the security level.
double oracle_constrained(const StageGame& g, double h, int res) {
  double best = -1e300;
  const int k = g.num_a();
  std::vector<int> c(k, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == k - 1) {
      c[i] = left;
      std::vector<double> p(k);
      for (int t = 0; t < k; ++t) p[t] = double(c[t]) / res;
      if (shannon_entropy(p) <= h)
        best = std::max(best, security_level(g, Player::kAlice, Pmf::from_weights(p)));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, res);
  return best;
}

TEST(StageGame, Validation) {
  EXPECT_THROW(StageGame({{1.0, 2.0}, {3.0}}), std::invalid_argument);
  EXPECT_THROW(StageGame(std::vector<std::vector<double>>{}), std::invalid_argument);
  EXPECT_THROW(security_level(kPennies, Player::kAlice, Pmf::uniform(3)),
               std::invalid_argument);
  EXPECT_DOUBLE_EQ(kPennies.max_abs(), 1.0);
}

TEST(StageGame, ForBobIsInvolution) {
  Rng rng(1);
  const StageGame g = random_game(rng, 3, 2);
  const StageGame back = g.for_bob().for_bob();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b) EXPECT_EQ(back.u(a, b), g.u(a, b));
}

TEST(Minimax, MatchingPennies) {
  const MinimaxSolution m = minimax(kPennies);
  EXPECT_NEAR(m.value, 0.0, 1e-12);
  EXPECT_NEAR(m.alice[0], 0.5, 1e-12);
  EXPECT_NEAR(m.bob[0], 0.5, 1e-12);
}

TEST(Minimax, RandomGamesAgreeWithGridOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const StageGame g = random_game(rng, 2, random_int(rng, 2, 3));
    const MinimaxSolution m = minimax(g);
    EXPECT_NEAR(security_level(g, Player::kAlice, m.alice), m.value, 1e-9);
    EXPECT_NEAR(security_level(g, Player::kBob, m.bob), m.value, 1e-9);
    double grid = -1e300;
    for (int i = 0; i <= 100000; ++i) {
      const double p = i / 100000.0;
      grid = std::max(grid, security_level(g, Player::kAlice, Pmf::from_weights({p, 1 - p})));
    }
    // Grid spacing 1e-5 with slopes at most 4.
    EXPECT_GE(m.value, grid - 1e-12);
    EXPECT_NEAR(m.value, grid, 1e-4);
  }
}

TEST(Security, MatchingPenniesClosedForm) {
  for (double h : {0.0, 0.1, 0.3, 0.5, 0.9, 1.0}) {
    // J(h) = 2 p_h - 1 where p_h <= 1/2 has binary entropy h.
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (lo + hi);
      (-m * std::log2(m) - (1 - m) * std::log2(1 - m) < h ? lo : hi) = m;
    }
    const ConstrainedSecurity s = entropy_constrained_security(kPennies, Player::kAlice, h);
    // The bisection oracle resolves p only to ~1e-8 where H is flat.
    const double tol = h > 0.95 ? 1e-7 : 1e-12;
    EXPECT_NEAR(s.value, 2.0 * lo - 1.0, tol) << h;
    EXPECT_LE(shannon_entropy(s.argmax), h + 1e-12);
    const ConstrainedSecurity b = entropy_constrained_security(kPennies, Player::kBob, h);
    EXPECT_NEAR(b.value, 1.0 - 2.0 * lo, tol) << h;
  }
  EXPECT_THROW(entropy_constrained_security(kPennies, Player::kAlice, -0.1),
               std::invalid_argument);
}

TEST(Security, ThreeActionAgreesWithGridOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const StageGame g = random_game(rng, 3, random_int(rng, 2, 3));
    const double vstar = minimax(g).value;
    for (double h : {0.0, 0.4, 0.9, 1.3, std::log2(3.0)}) {
      const ConstrainedSecurity s = entropy_constrained_security(g, Player::kAlice, h);
      EXPECT_GE(s.value, oracle_constrained(g, h, 300) - 1e-3);
      EXPECT_LE(s.value, vstar + 1e-9);
      EXPECT_LE(shannon_entropy(s.argmax), h + 1e-12);
      EXPECT_NEAR(security_level(g, Player::kAlice, s.argmax), s.value, 1e-12);
    }
  }
}

TEST(Curve, MatchingPenniesEnvelopeIsChord) {
  const SecurityCurve c = security_curve(kPennies, Player::kAlice, 513);
  ASSERT_EQ(c.h.size(), 513u);
  for (size_t k = 0; k < c.h.size(); ++k) EXPECT_NEAR(c.envelope[k], c.h[k] - 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.value_at(0.0), -1.0);
  const SecurityCurve b = security_curve(kPennies, Player::kBob, 513);
  EXPECT_DOUBLE_EQ(envelope_value(b, 1.0), 0.0);
  EXPECT_NEAR(envelope_value(b, 0.25), 0.75, 1e-12);
}

TEST(Curve, Invariants) {
  Rng rng(4);
  for (int trial = 0; trial < 12; ++trial) {
    const int na = random_int(rng, 2, 3);
    const StageGame g = random_game(rng, na, random_int(rng, 2, 3));
    const double vstar = minimax(g).value;
    for (Player who : {Player::kAlice, Player::kBob}) {
      const SecurityCurve c = security_curve(g, who, 65);
      const double sign = who == Player::kAlice ? 1.0 : -1.0;
      for (size_t k = 0; k < c.h.size(); ++k) {
        EXPECT_GE(sign * (c.envelope[k] - c.j[k]), -1e-12);
        if (k > 0) EXPECT_GE(sign * (c.j[k] - c.j[k - 1]), -1e-12);
        if (k > 0 && k + 1 < c.h.size())
          EXPECT_LE(sign * (c.envelope[k + 1] - 2 * c.envelope[k] + c.envelope[k - 1]), 1e-9);
      }
      EXPECT_NEAR(c.envelope.back(), vstar, who == Player::kAlice && na == 2 ? 1e-12 : 1e-6);
      double pure = who == Player::kAlice ? -1e300 : 1e300;
      for (int a = 0; a < num_actions(g, who); ++a) {
        const double v = security_level(g, who, Pmf::point_mass(num_actions(g, who), a));
        pure = who == Player::kAlice ? std::max(pure, v) : std::min(pure, v);
      }
      EXPECT_NEAR(c.j.front(), pure, 1e-12);
    }
  }
}

TEST(Decomposition, MatchingPenniesFullEntropy) {
  const JointPmf src = JointPmf::independent(Pmf::uniform(2), Pmf({1.0}));
  const EnvelopeDecomposition d =
      envelope_decomposition(kPennies, Player::kAlice, 1.0, src);
  EXPECT_FALSE(d.trivial);
  EXPECT_DOUBLE_EQ(d.r, 1.0);
  EXPECT_NEAR(d.p1[0], 0.5, 1e-12);
  EXPECT_TRUE(d.p2.is_deterministic());
  EXPECT_NEAR(d.beta, 1.0, 1e-12);
  EXPECT_NEAR(d.gamma, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(d.mu, 2.0);
  EXPECT_NEAR(d.value_at_h, 0.0, 1e-12);
}

TEST(Decomposition, ZeroEntropyIsTrivial) {
  const JointPmf src = JointPmf::independent(Pmf({1.0}), Pmf::uniform(2));
  const EnvelopeDecomposition d = envelope_decomposition(kPennies, Player::kAlice, 0.0, src);
  EXPECT_TRUE(d.trivial);
  EXPECT_DOUBLE_EQ(d.mu, 0.0);
  EXPECT_DOUBLE_EQ(d.value_at_h, -1.0);
}

TEST(Decomposition, InteriorPointMatchesEnvelope) {
  const JointPmf src = JointPmf::independent(Pmf({0.5, 0.5}), Pmf({1.0}));
  const EnvelopeDecomposition d = envelope_decomposition(kPennies, Player::kAlice, 0.5, src);
  EXPECT_NEAR(d.r, 0.5, 1e-12);
  EXPECT_NEAR(d.value_at_h, -0.5, 1e-12);
  EXPECT_NEAR(d.envelope_value, -0.5, 1e-12);
  const EnvelopeDecomposition b = envelope_decomposition(kPennies, Player::kBob, 0.5, src);
  EXPECT_NEAR(b.value_at_h, 0.5, 1e-12);
  EXPECT_NEAR(b.r, 0.5, 1e-12);
}

TEST(Decomposition, DominantRowIsTrivialEverywhere) {
  const StageGame g({{2.0, 1.0}, {0.0, -1.0}});
  const JointPmf src = JointPmf::independent(Pmf::uniform(2), Pmf({1.0}));
  for (double h : {0.0, 0.5, 1.0}) {
    const EnvelopeDecomposition d = envelope_decomposition(g, Player::kAlice, h, src);
    EXPECT_TRUE(d.trivial);
    EXPECT_EQ(d.trivial_action, 0);
    EXPECT_DOUBLE_EQ(d.value_at_h, 1.0);
  }
}

TEST(Decomposition, RandomGamesValueDominatesEnvelope) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const StageGame g = random_game(rng, random_int(rng, 2, 3), random_int(rng, 2, 3));
    const JointPmf src = testing::random_joint(rng, 3, 2);
    const double h = conditional_shannon(src);
    const EnvelopeDecomposition d = envelope_decomposition(g, Player::kAlice, h, src, 129);
    EXPECT_GE(d.value_at_h, d.envelope_value - 1e-9);
    if (!d.trivial) {
      EXPECT_GT(d.beta, 0.0);
      EXPECT_GE(d.r, 0.0);
      EXPECT_LE(d.r, 1.0);
      EXPECT_LE(d.r * shannon_entropy(d.p1) + (1 - d.r) * shannon_entropy(d.p2), h + 1e-9);
      EXPECT_GE(d.mu, 2.0 * g.max_abs());
    }
  }
}

}  // namespace
}  // namespace entgame
