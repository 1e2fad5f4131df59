#include <gtest/gtest.h>

#include <cmath>

#include "entgame/equilibria.hpp"
#include "test_util.hpp"

namespace entgame {
namespace {

const StageGame kPennies({{1.0, -1.0}, {-1.0, 1.0}});

// Alice's source constant, Bob's a fair bit.
JointPmf example_source() { return JointPmf::independent(Pmf({1.0}), Pmf::uniform(2)); }

// Follows the cycle, deviates once at (block j, stage s) with `dev`, plays the
// static best reply for the rest of that block, then best-responds to the
// punishment block by block.
class Deviator : public Strategy {
 public:
  Deviator(const StageGame& g, const FolkProfile& p, bool alice, int j, int s, int dev,
           std::shared_ptr<ResponseStrategy> br)
      : g_(g), p_(p), alice_(alice), j_(j), s_(s), dev_(dev), br_(std::move(br)) {}

  int act(int t, const History& h) const override {
    const int k = p_.block_length, block = t / k, s = t % k, s0 = block * k;
    const auto [ca, cb] = p_.cycle[s];
    if (block < j_ || (block == j_ && s < s_)) return alice_ ? ca : cb;
    if (block == j_ && s == s_) return dev_;
    if (block == j_) {
      int best = 0;
      double bv = -1e300;
      for (int d = 0; d < num_actions(); ++d) {
        const double v = alice_ ? g_.u(d, cb) : -g_.u(ca, d);
        if (v > bv + 1e-15) bv = v, best = d;
      }
      return best;
    }
    const History sub{h.own_source.subspan(s0, t - s0 + 1), h.own_actions.subspan(s0, t - s0),
                      h.opp_actions.subspan(s0, t - s0)};
    return br_->act(t - s0, sub);
  }
  bool autonomous() const override { return false; }
  bool noncausal() const override { return false; }
  int horizon() const override { return p_.horizon(); }
  int num_actions() const override { return alice_ ? g_.num_a() : g_.num_b(); }
  nlohmann::json describe() const override { return {}; }

 private:
  const StageGame& g_;
  const FolkProfile& p_;
  bool alice_;
  int j_, s_, dev_;
  std::shared_ptr<ResponseStrategy> br_;
};

// Exhaustive search over single-deviation strategies with exact payoffs.
double simulated_gain(const StageGame& g, const FolkProfile& p, const JointPmf& src, bool alice) {
  const auto br = alice ? best_response_a(g, *p.punish_by_bob.strategy, src, false)
                        : best_response_b(g, *p.punish_by_alice.strategy, src, false);
  const int nd = alice ? g.num_a() : g.num_b();
  double best = 0.0;
  for (int j = 0; j < p.n_blocks; ++j)
    for (int s = 0; s < p.block_length; ++s)
      for (int d = 0; d < nd; ++d) {
        const Deviator dv(g, p, alice, j, s, d, br.strategy);
        const double lam = alice ? evaluate_payoff_exact(g, dv, *p.bob, src).mean
                                 : evaluate_payoff_exact(g, *p.alice, dv, src).mean;
        best = std::max(best, alice ? lam - p.v_hat : p.v_hat - lam);
      }
  return best;
}

TEST(Region, ExampleIsSinglePoint) {
  const EquilibriumRegion r = equilibrium_region(kPennies, example_source(), 0.5, 0.5);
  EXPECT_FALSE(r.empty);
  EXPECT_NEAR(r.j_cav, -1.0, 1e-12);
  EXPECT_NEAR(r.j_vex, 0.0, 1e-12);
  EXPECT_NEAR(r.lower, -0.5, 1e-12);
  EXPECT_NEAR(r.upper, -0.5, 1e-12);
  EXPECT_NEAR(min_epsilon_sum(kPennies, example_source()), 1.0, 1e-12);
  EXPECT_TRUE(equilibrium_region(kPennies, example_source(), 0.4, 0.5).empty);
  EXPECT_THROW(equilibrium_region(kPennies, example_source(), -0.1, 0.5), std::invalid_argument);
}

TEST(Region, FullEntropyContainsValue) {
  const JointPmf src = JointPmf::independent(Pmf::uniform(2), Pmf::uniform(2));
  const EquilibriumRegion r = equilibrium_region(kPennies, src, 0.0, 0.0);
  EXPECT_FALSE(r.empty);
  EXPECT_NEAR(r.lower, 0.0, 1e-12);
  EXPECT_NEAR(r.upper, 0.0, 1e-12);
  EXPECT_NEAR(min_epsilon_sum(kPennies, src), 0.0, 1e-12);
}

TEST(Region, MonotoneInEpsilon) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> u(2, std::vector<double>(2));
    for (auto& row : u)
      for (double& v : row) v = std::round(8.0 * (2.0 * rng.uniform() - 1.0)) / 4.0;
    const StageGame g(u);
    const JointPmf src = testing::random_joint(rng, 2, 2);
    const double ea = rng.uniform(), eb = rng.uniform();
    const auto r1 = equilibrium_region(g, src, ea, eb, 129);
    const auto r2 = equilibrium_region(g, src, ea + 0.1, eb + 0.2, 129);
    EXPECT_LE(r2.lower, r1.lower + 1e-12);
    EXPECT_GE(r2.upper, r1.upper - 1e-12);
    EXPECT_LE(r1.j_cav, r1.j_vex + 1e-9);
    const double m = min_epsilon_sum(g, src, 129);
    EXPECT_FALSE(equilibrium_region(g, src, m / 2, m / 2 + 1e-10, 129).empty);
  }
}

TEST(Cycle, ConvergentsApproximateWithinTolerance) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = 2.0 * rng.uniform() - 1.0;
    const double tol = trial % 2 ? 1e-3 : 1e-2;
    const auto c = detail::payoff_cycle(kPennies, v, tol, 1000);
    double s = 0.0;
    for (const auto& [a, b] : c.cycle) s += kPennies.u(a, b);
    EXPECT_DOUBLE_EQ(c.v_hat, s / c.cycle.size());
    EXPECT_LE(std::abs(c.v_hat - v), tol);
    // A shorter cycle never meets the tolerance.
    for (size_t k = 1; k < c.cycle.size(); ++k) {
      const double best = std::round((v + 1.0) / 2.0 * k) / k * 2.0 - 1.0;
      EXPECT_GT(std::abs(best - v), tol * 0.999) << v << " " << k;
    }
  }
}

TEST(Folk, ExampleCycleAndAudit) {
  const JointPmf src = example_source();
  Rng rng(5);
  FolkOptions opt;
  opt.punish_delta = 0.3;
  const FolkProfile p = construct_folk_profile(kPennies, src, -0.5, 0.5, 0.5, 0.0, 3, rng, opt);
  ASSERT_EQ(p.cycle_length, 4);
  EXPECT_EQ(p.block_length, 4);
  const std::vector<std::pair<int, int>> want{{0, 0}, {0, 1}, {0, 1}, {0, 1}};
  EXPECT_EQ(p.cycle, want);
  EXPECT_DOUBLE_EQ(p.v_hat, -0.5);
  EXPECT_DOUBLE_EQ(on_path_payoff(kPennies, p), -0.5);
  EXPECT_DOUBLE_EQ(evaluate_payoff_exact(kPennies, *p.alice, *p.bob, src).mean, -0.5);
  EXPECT_NEAR(p.punish_by_alice.slack, 0.0, 1e-12);
  EXPECT_NEAR(p.punish_by_bob.slack, 0.25, 1e-12);

  for (bool alice : {true, false}) {
    const double gain = deviation_gain(kPennies, p, alice ? Player::kAlice : Player::kBob);
    EXPECT_NEAR(gain, simulated_gain(kPennies, p, src, alice), 1e-12) << alice;
    const double bound = 0.5 + 2.0 * kPennies.max_abs() / p.n_blocks + 2.0 * p.delta_eff();
    EXPECT_LE(gain, bound);
  }
  const double last = deviation_gain(kPennies, p, Player::kAlice, p.n_blocks - 1);
  EXPECT_LE(last, (kPennies.max_abs() - p.v_hat) / p.n_blocks + 1e-12);
}

TEST(Folk, RandomGamesMatchSimulatedDeviations) {
  Rng rng(13);
  int built = 0;
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<std::vector<double>> u(2, std::vector<double>(2));
    for (auto& row : u)
      for (double& v : row) v = std::round(4.0 * (2.0 * rng.uniform() - 1.0)) / 2.0;
    const StageGame g(u);
    const JointPmf src = testing::random_joint(rng, 2, 2, 0.3);
    const auto r = equilibrium_region(g, src, 0.3, 0.3, 129);
    if (r.empty) continue;
    const double v = r.lower + rng.uniform() * (r.upper - r.lower);
    FolkOptions opt;
    opt.grid = 129;
    opt.max_cycle = 4;
    opt.max_block = 4;
    opt.max_window = 2;
    const FolkProfile p = construct_folk_profile(g, src, v, 0.3, 0.3, 0.25, 2, rng, opt);
    ASSERT_LE(p.horizon(), 8);
    for (bool alice : {true, false}) {
      const double gain = deviation_gain(g, p, alice ? Player::kAlice : Player::kBob);
      EXPECT_NEAR(gain, simulated_gain(g, p, src, alice), 1e-9);
    }
    EXPECT_NEAR(on_path_payoff(g, p), p.v_hat, 1e-12);
    ++built;
  }
  EXPECT_GE(built, 4);
}

TEST(Folk, RejectsOutsideRegion) {
  Rng rng(1);
  EXPECT_THROW(construct_folk_profile(kPennies, example_source(), 0.0, 0.5, 0.5, 0.0, 3, rng),
               NotConstructible);
  EXPECT_THROW(construct_folk_profile(kPennies, example_source(), -0.5, 0.5, 0.5, 0.0, 0, rng),
               std::invalid_argument);
}

}  // namespace
}  // namespace entgame
