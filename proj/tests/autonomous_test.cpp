#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "entgame/autonomous.hpp"
#include "test_util.hpp"

namespace entgame {
namespace {

const StageGame kPennies({{1.0, -1.0}, {-1.0, 1.0}});

StageGame random_game(Rng& rng) {
  std::vector<std::vector<double>> u(2, std::vector<double>(2));
  for (auto& row : u)
    for (double& v : row) v = std::round(8.0 * (2.0 * rng.uniform() - 1.0)) / 4.0;
  return StageGame(u);
}

AutonomousCertificate random_certificate(Rng& rng, int na, int nb) {
  AutonomousCertificate c;
  c.p_q = testing::random_pmf(rng, kNumStates, 0.3);
  for (int q = 0; q < kNumStates; ++q) {
    c.a_given_q.push_back(testing::random_pmf(rng, na, 0.3));
    c.b_given_q.push_back(testing::random_pmf(rng, nb, 0.3));
  }
  return c;
}

TEST(GValues, WorkedExamples) {
  AutonomousCertificate c = detail::single_state(2, 2, Pmf::uniform(2), Pmf::uniform(2));
  auto [ga, gb] = g_values(kPennies, c);
  EXPECT_DOUBLE_EQ(ga, 0.0);
  EXPECT_DOUBLE_EQ(gb, 0.0);
  c = detail::single_state(2, 2, Pmf::point_mass(2, 0), Pmf::point_mass(2, 0));
  std::tie(ga, gb) = g_values(kPennies, c);
  EXPECT_DOUBLE_EQ(ga, 0.0);
  EXPECT_DOUBLE_EQ(gb, 2.0);
}

TEST(GValues, NonNegativeAndFieldsRecomputed) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int na = testing::random_int(rng, 2, 3), nb = testing::random_int(rng, 2, 3);
    std::vector<std::vector<double>> u(na, std::vector<double>(nb));
    for (auto& row : u)
      for (double& v : row) v = 2.0 * rng.uniform() - 1.0;
    const StageGame g(u);
    const AutonomousCertificate c = finalize_certificate(g, random_certificate(rng, na, nb));
    EXPECT_GE(c.g_a, 0.0);
    EXPECT_GE(c.g_b, 0.0);
    double ha = 0.0;
    for (int q = 0; q < kNumStates; ++q) ha += c.p_q[q] * shannon_entropy(c.a_given_q[q]);
    EXPECT_NEAR(c.h_a, ha, 1e-12);
  }
}

TEST(GValues, CertificateValueLiesInRegion) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const StageGame g = random_game(rng);
    const AutonomousCertificate c = finalize_certificate(g, random_certificate(rng, 2, 2));
    const double jc = security_curve(g, Player::kAlice, 513).value_at(c.h_a);
    const double jv = security_curve(g, Player::kBob, 513).value_at(c.h_b);
    // Grid interpolation of the envelopes.
    EXPECT_LE(c.value - c.g_b, jc + 1e-3);
    EXPECT_GE(c.value + c.g_a, jv - 1e-3);
  }
}

TEST(Degenerate, ExampleOneIsInfeasible) {
  const DegenerateVerdict v = autonomous_feasible_degenerate(kPennies, 0.0, 1.0, 0.5, 0.5);
  EXPECT_FALSE(v.feasible);
  EXPECT_GE(v.min_gain_sum, 1.0 - 1e-6);
  EXPECT_NEAR(v.min_gain_sum, 1.0, 1e-9);
  // The regret pairs' lower boundary is the segment g_A + 2 g_B = 2 from (0,1) to (2,0).
  EXPECT_NEAR(v.min_excess, 1.0 / 6.0, 1e-9);
  EXPECT_NEAR(std::max(v.certificate.g_a - 0.5, v.certificate.g_b - 0.5), v.min_excess, 1e-9);
  EXPECT_NEAR(v.certificate.h_a, 0.0, 1e-12);

  const DegenerateVerdict w = autonomous_feasible_degenerate(kPennies, 0.0, 1.0, 0.0, 1.0);
  EXPECT_TRUE(w.feasible);
  EXPECT_LE(certificate_violation(kPennies, w.certificate, 0.0, 1.0, 0.0, 1.0), kCertificateTolerance);
  EXPECT_FALSE(autonomous_feasible_degenerate(kPennies, 0.0, 1.0, 1.0, 0.0).feasible);
  EXPECT_TRUE(autonomous_feasible_degenerate(kPennies, 0.0, 1.0, 1.0, 1.0).feasible);
  EXPECT_THROW(autonomous_feasible_degenerate(kPennies, 0.5, 0.5, 1.0, 1.0), std::invalid_argument);
}

// Two-state mixtures over a grid of column laws; an upper bound on the exact minimum.
double oracle_excess(const StageGame& g, double h_y, double ea, double eb, int res) {
  struct Pt { double ga, gb, h; };
  std::vector<Pt> pts;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i <= res; ++i) {
      const Pmf pb({double(i) / res, 1.0 - double(i) / res});
      const auto c = finalize_certificate(g, detail::single_state(2, 2, Pmf::point_mass(2, a), pb));
      pts.push_back({c.g_a, c.g_b, c.h_b});
    }
  double best = 1e300;
  for (const Pt& x : pts)
    for (const Pt& y : pts)
      for (int k = 0; k <= 40; ++k) {
        const double w = k / 40.0;
        if (w * x.h + (1 - w) * y.h > h_y) continue;
        best = std::min(best, std::max(w * x.ga + (1 - w) * y.ga - ea, w * x.gb + (1 - w) * y.gb - eb));
      }
  return best;
}

// Weak-duality lower bound: for weights l on the two budgets and m >= 0 on the
// entropy budget, every mixture has excess >= min over atoms of
// l(g_A - e_A) + (1 - l)(g_B - e_B) + m(H - h_Y).
double dual_lower_bound(const StageGame& g, double h_y, double ea, double eb, int res) {
  std::vector<std::array<double, 3>> pts;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i <= res; ++i) {
      const Pmf pb({double(i) / res, 1.0 - double(i) / res});
      const auto c = finalize_certificate(g, detail::single_state(2, 2, Pmf::point_mass(2, a), pb));
      pts.push_back({c.g_a - ea, c.g_b - eb, c.h_b - h_y});
    }
  double best = -1e300;
  for (int li = 0; li <= 20; ++li)
    for (int mi = 0; mi <= 100; ++mi) {
      const double l = li / 20.0, m = mi / 20.0;
      double lo = 1e300;
      for (const auto& p : pts) lo = std::min(lo, l * p[0] + (1 - l) * p[1] + m * p[2]);
      best = std::max(best, lo);
    }
  return best;
}

TEST(Degenerate, AgreesWithGridOracle) {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const StageGame g = random_game(rng);
    const double hy = rng.uniform(), ea = rng.uniform(), eb = rng.uniform();
    const DegenerateVerdict v = autonomous_feasible_degenerate(g, 0.0, hy, ea, eb);
    const AutonomousCertificate& c = v.certificate;
    EXPECT_LE(v.atoms, kNumStates);
    EXPECT_LE(c.h_b, hy + 1e-9);
    EXPECT_NEAR(std::max(c.g_a - ea, c.g_b - eb), v.min_excess, 1e-9);
    const double oracle = oracle_excess(g, hy, ea, eb, 120);
    EXPECT_LE(v.min_excess, oracle + 1e-9);
    // Grid spacing 1/2000 and slopes at most 8 on each concave piece.
    EXPECT_GE(v.min_excess, dual_lower_bound(g, hy, ea, eb, 2000) - 5e-3);
    // Role swap through the transposed game.
    const DegenerateVerdict s = autonomous_feasible_degenerate(g.for_bob(), hy, 0.0, eb, ea);
    EXPECT_NEAR(s.min_excess, v.min_excess, 1e-9);
    EXPECT_NEAR(s.certificate.h_b, 0.0, 1e-12);
  }
}

TEST(Search, FullEntropyGivesZeroRegretCertificate) {
  Rng rng(1);
  const StageGame g({{3.0, -1.0, 0.0}, {-2.0, 2.0, 1.0}});
  const FeasibilityResult r = autonomous_feasible(g, 1.0, std::log2(3.0), 0.0, 0.0, rng);
  ASSERT_TRUE(r.certificate);
  EXPECT_EQ(r.origin, "minimax");
  EXPECT_LE(r.certificate->g_a, 1e-9);
  EXPECT_LE(r.certificate->g_b, 1e-9);
  EXPECT_NEAR(r.certificate->value, minimax(g).value, 1e-9);
}

TEST(Search, ExampleOneNotFoundAndLargeEpsilonTrivial) {
  Rng rng(2);
  AutonomousSearch cfg;
  cfg.restarts = 8;
  cfg.steps = 100;
  const FeasibilityResult r = autonomous_feasible(kPennies, 0.0, 1.0, 0.5, 0.5, rng, cfg);
  EXPECT_FALSE(r.certificate);
  EXPECT_EQ(r.status, "not-found-at-resolution");
  EXPECT_NEAR(r.best_violation, 1.0 / 6.0, 1e-9);
  const FeasibilityResult t = autonomous_feasible(kPennies, 0.0, 0.0, 2.0, 2.0, rng, cfg);
  ASSERT_TRUE(t.certificate);
  EXPECT_EQ(t.origin, "pure(0,0)");
}

TEST(Search, DescentFindsInteriorCertificate) {
  Rng rng(3);
  // No seed works: pure pairs leave a regret of 2 and minimax needs a full bit.
  const FeasibilityResult r = autonomous_feasible(kPennies, 0.5, 0.5, 1.0, 1.0, rng);
  ASSERT_TRUE(r.certificate);
  EXPECT_EQ(r.origin.rfind("restart", 0), 0u);
  EXPECT_LE(certificate_violation(kPennies, *r.certificate, 0.5, 0.5, 1.0, 1.0), kCertificateTolerance);
}

TEST(Search, CertificatesRevalidate) {
  Rng rng(24);
  AutonomousSearch cfg;
  cfg.restarts = 4;
  cfg.steps = 150;
  int found = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const StageGame g = random_game(rng);
    const double hx = rng.uniform(), hy = rng.uniform(), ea = 2 * rng.uniform(), eb = 2 * rng.uniform();
    const FeasibilityResult r = autonomous_feasible(g, hx, hy, ea, eb, rng, cfg);
    if (!r.certificate) continue;
    ++found;
    EXPECT_LE(certificate_violation(g, *r.certificate, hx, hy, ea, eb), kCertificateTolerance);
    const double jc = security_curve(g, Player::kAlice, 513).value_at(r.certificate->h_a);
    const double jv = security_curve(g, Player::kBob, 513).value_at(r.certificate->h_b);
    EXPECT_LE(r.certificate->value, jc + r.certificate->g_b + 1e-3);
    EXPECT_GE(r.certificate->value, jv - r.certificate->g_a - 1e-3);
  }
  EXPECT_GE(found, 3);
}

TEST(Subblocks, PlanInvariants) {
  Rng rng(25);
  for (int trial = 0; trial < 300; ++trial) {
    const Pmf pq = testing::random_pmf(rng, kNumStates, 0.3);
    const int n = testing::random_int(rng, 1, 40);
    const SubblockPlan p = subblock_plan(pq, n);
    ASSERT_EQ(static_cast<int>(p.state.size()), n);
    int at = 0, need = 0;
    for (int q = 0; q < kNumStates; ++q) {
      EXPECT_EQ(p.intervals[q].first, at);
      at = p.intervals[q].second;
      if (q < 3) need += static_cast<int>(std::ceil(pq[q] * n - 1e-9));
    }
    EXPECT_EQ(at, n);
    if (need <= n)
      for (int q = 0; q < 3; ++q)
        EXPECT_EQ(p.intervals[q].second - p.intervals[q].first,
                  static_cast<int>(std::ceil(pq[q] * n - 1e-9)));
  }
}

TEST(Profile, UniformBitsSimulateExactly) {
  Rng rng(4);
  const AutonomousCertificate c = detail::single_state(2, 2, Pmf::uniform(2), Pmf::uniform(2));
  const AutonomousProfile p = build_autonomous_profile(kPennies, Pmf::uniform(4), Pmf::uniform(4), c, 3, 3, rng);
  EXPECT_NEAR(p.tv_a, 0.0, 1e-12);
  EXPECT_NEAR(p.tv_b, 0.0, 1e-12);
  EXPECT_TRUE(p.alice->autonomous());
  // Replay with perturbed opponent histories.
  const std::vector<int> xs{0, 1, 2, 3, 3, 2, 1, 0, 2};
  std::vector<int> own, opp1(9, 0), opp2(9, 1);
  for (int t = 0; t < 9; ++t) {
    const std::span<const int> x(xs);
    const int a1 = p.alice->act(t, {x.first(t + 1), own, std::span<const int>(opp1).first(t)});
    const int a2 = p.alice->act(t, {x.first(t + 1), own, std::span<const int>(opp2).first(t)});
    EXPECT_EQ(a1, a2);
    own.push_back(a1);
  }
  // First block plays (0, 0) for +1; later blocks average 0.
  EXPECT_NEAR(independent_autonomous_payoff(kPennies, *p.alice, *p.bob, Pmf::uniform(4), Pmf::uniform(4)),
              1.0 / 3.0, 1e-12);
}

TEST(Profile, PayoffMatchesExactEvaluatorAndBudget) {
  Rng rng(26);
  for (int trial = 0; trial < 6; ++trial) {
    const StageGame g = random_game(rng);
    AutonomousCertificate c;
    c.p_q = Pmf({0.5, 0.5, 0.0, 0.0});
    for (int q = 0; q < kNumStates; ++q) {
      c.a_given_q.push_back(Pmf::from_weights({0.5 + 0.4 * rng.uniform(), 0.5}));
      c.b_given_q.push_back(Pmf::from_weights({0.5, 0.5 + 0.4 * rng.uniform()}));
    }
    const Pmf px = Pmf::uniform(3), py = Pmf::uniform(3);
    const AutonomousProfile p = build_autonomous_profile(g, px, py, c, 2, 2, rng);
    const double lam = independent_autonomous_payoff(g, *p.alice, *p.bob, px, py);
    const JointPmf src = JointPmf::independent(px, py);
    EXPECT_NEAR(lam, evaluate_payoff_exact(g, *p.alice, *p.bob, src).mean, 1e-12);
    // Per-stage laws of later blocks are within the simulators' TV of the plan.
    const double m = g.max_abs();
    const double first = g.u(p.alice->blocks()[0].fixed_action, p.bob->blocks()[0].fixed_action);
    EXPECT_LE(std::abs(lam - (first + p.plan_value) / 2.0), 4.0 * m * p.delta() / 2.0 + 1e-12);
    EXPECT_GE(lam, (-m + (p.plan_value - 4.0 * m * p.delta())) / 2.0 - 1e-12);
  }
}

TEST(Profile, RejectsZeroSlack) {
  Rng rng(5);
  const AutonomousCertificate c = detail::single_state(2, 2, Pmf::uniform(2), Pmf::uniform(2));
  EXPECT_THROW(build_autonomous_profile(kPennies, Pmf::uniform(2), Pmf::uniform(4), c, 2, 2, rng),
               NotConstructible);
  // A deterministic side needs no randomness.
  const AutonomousCertificate d = detail::single_state(2, 2, Pmf::point_mass(2, 1), Pmf::uniform(2));
  EXPECT_NO_THROW(build_autonomous_profile(kPennies, Pmf({1.0}), Pmf::uniform(4), d, 2, 2, rng));
}

}  // namespace
}  // namespace entgame
