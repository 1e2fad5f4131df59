#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entgame/autonomous.hpp"
#include "entgame/equilibria.hpp"
#include "entgame/error.hpp"
#include "entgame/info.hpp"
#include "entgame/json_io.hpp"
#include "entgame/repeated_game.hpp"
#include "entgame/source_sim.hpp"
#include "entgame/stage_game.hpp"
#include "json.hpp"

namespace entgame::cli {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kOverflow = 3 };

struct Options {
  std::string config, game, source, target, out;
  std::string player = "alice", kind = "causal", mode = "search";
  std::uint64_t seed = 1;
  int trials = 0, grid = 513, budget = 200, alpha_steps = 31;
  int blocks = 5, block_length = 3, max_block = 64, max_cycle = 64, restarts = 64, steps = 500;
  int f = 0;
  std::vector<int> n{8};
  double alpha_min = 0.5, alpha_max = 2.0;
  double eps_a = 0.0, eps_b = 0.0, v = 0.0, delta = 0.0, punish_delta = -1.0;
  double g = -1.0, h = -1.0, h_x = -1.0, h_y = -1.0;
};

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

// Serializes every option of the chosen subcommand, defaults included.
inline nlohmann::json resolved_config(const CLI::App& sub) {
  nlohmann::json j{{"command", sub.get_name()}};
  for (const CLI::Option* o : sub.get_options()) {
    if (o->get_lnames().empty() || o->get_name().find("help") != std::string::npos) continue;
    std::string val;
    if (o->count() > 0) {
      const auto& r = o->results();
      for (size_t i = 0; i < r.size(); ++i) val += (i ? "," : "") + r[i];
    } else {
      val = o->get_default_str();
    }
    nlohmann::json v = nlohmann::json::parse(val, nullptr, false);
    j[o->get_lnames().front()] = v.is_discarded() || v.is_object() ? nlohmann::json(val) : v;
  }
  return j;
}

// Expands a JSON config into flags for keys absent from the command line.
// Relative paths resolve against the config file's directory.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> kept;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (path.empty()) return kept;
  const nlohmann::json cfg = read_json_file(path);
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") continue;
    std::string flag = "--" + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    bool present = false;
    for (const auto& a : kept) present |= a == flag || a.rfind(flag + "=", 0) == 0;
    if (present) continue;
    std::string text;
    if (value.is_array()) {
      for (size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + value[i].dump();
    } else if (value.is_string()) {
      text = value.get<std::string>();
      if ((key == "game" || key == "source" || key == "target" || key == "out") &&
          std::filesystem::path(text).is_relative())
        text = (base / text).string();
    } else {
      text = value.dump();
    }
    kept.push_back(flag + "=" + text);
  }
  if (cfg.contains("command") && (kept.size() < 2 || kept[1].rfind("-", 0) == 0))
    kept.insert(kept.begin() + 1, cfg["command"].get<std::string>());
  return kept;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigError("cannot write " + path);
    out_ = file_.get();
  }
  std::ostream& operator*() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

inline Player parse_player(const std::string& s) {
  if (s == "alice") return Player::kAlice;
  if (s == "bob") return Player::kBob;
  throw ConfigError("player must be alice or bob");
}

inline void check_n_list(const std::vector<int>& n) {
  if (n.empty()) throw ConfigError("n-list is empty");
  for (size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1) throw ConfigError("n must be positive");
    if (i > 0 && n[i] <= n[i - 1]) throw ConfigError("n-list must be strictly increasing");
  }
}

inline void cmd_entropy(const Options& o, std::ostream& out) {
  const nlohmann::json src = read_json_file(o.source);
  const bool joint = src.is_object() && src.contains("joint");
  if (o.alpha_steps < 2 || !(o.alpha_min > 0.0) || !(o.alpha_max > o.alpha_min))
    throw ConfigError("need alpha_min > 0, alpha_max > alpha_min and at least 2 steps");
  JointPmf j;
  Pmf p;
  if (joint) {
    j = joint_from_json(src);
    p = j.marginal_x();
  } else {
    p = pmf_from_json(src);
  }
  out << "alpha,renyi,shannon" << (joint ? ",conditional_renyi,conditional_shannon" : "") << "\n";
  for (int i = 0; i < o.alpha_steps; ++i) {
    const double a = o.alpha_min + (o.alpha_max - o.alpha_min) * i / (o.alpha_steps - 1);
    out << num(a) << "," << num(renyi_entropy(p, a)) << "," << num(shannon_entropy(p));
    if (joint) out << "," << num(conditional_renyi(j, a)) << "," << num(conditional_shannon(j));
    out << "\n";
  }
}

inline void cmd_envelope(const Options& o, std::ostream& out) {
  const StageGame g = game_from_json(read_json_file(o.game));
  const SecurityCurve c = security_curve(g, parse_player(o.player), o.grid);
  out << "h,J,envelope\n";
  for (size_t k = 0; k < c.h.size(); ++k)
    out << num(c.h[k]) << "," << num(c.j[k]) << "," << num(c.envelope[k]) << "\n";
}

inline void cmd_simulate(const Options& o, std::ostream& out) {
  const JointPmf src = joint_from_json(read_json_file(o.source));
  const Pmf target = pmf_from_json(read_json_file(o.target));
  const int n = o.n.front();
  if (n < 1) throw ConfigError("n must be positive");
  Rng rng(o.seed);
  SimulatorSearch s;
  s.budget = o.budget;
  const SimulatorResult r = find_simulator(iid_extend(src, n), iid_extend(target, n), rng, s);
  out << nlohmann::json{{"n", n},
                        {"tv", r.report.tv},
                        {"bound", r.report.bound},
                        {"alpha_star", r.report.alpha_star},
                        {"attempts", r.report.attempts},
                        {"mode", to_string(r.report.mode)},
                        {"table", r.map.table}}
             .dump(2)
      << "\n";
}

inline int cmd_rate(const Options& o, std::ostream& out) {
  const StageGame game = game_from_json(read_json_file(o.game));
  const JointPmf src = joint_from_json(read_json_file(o.source));
  const GameKind kind = parse_game_kind(o.kind);
  check_n_list(o.n);
  Rng rng(o.seed);
  if (kind == GameKind::kExponential && !iid_simulation_exponent(src, minimax(game).alice)) {
    out << "not-applicable: H(X|Y) does not exceed the entropy of the minimax strategy\n";
    return kOk;
  }
  const EnvelopeDecomposition d =
      envelope_decomposition(game, Player::kAlice, conditional_shannon(src), src, o.grid);
  const RateParams p = RateParams::from(d);
  out << "n,f_n,g_n,h_n,bound,lambda_exact_or_mc,ci,achieved_tv_max\n";
  for (int n : o.n) {
    Rng child = rng.fork(static_cast<std::uint64_t>(n));
    std::shared_ptr<BlockCodedStrategy> sigma;
    int f = 1;
    double g = 0.0, h = 0.0, bound = 0.0;
    if (kind == GameKind::kExponential) {
      const auto e = build_exponential_strategy(game, src, n, child);
      sigma = e->strategy;
      bound = payoff_lower_bound(kind, e->params, n, 1, 0.0, 0.0);
    } else {
      const RateSchedule rs = rate_schedule(kind, n, p);
      f = kind == GameKind::kCausal ? (o.f > 0 ? std::min(o.f, n) : rs.f) : 1;
      g = o.g >= 0.0 ? std::min(o.g, p.r) : rs.g;
      h = o.h >= 0.0 ? o.h : rs.h;
      if (kind == GameKind::kCausal) {
        sigma = build_block_markov_strategy(src, block_schedule(n, f, g, h, p), d, child);
      } else {
        sigma = build_noncausal_strategy(src, n, g, d, child);
      }
      bound = payoff_lower_bound(kind, p, n, f, g, h);
    }
    const BestResponse br = best_response_b(game, *sigma, src);
    double lambda = br.value, ci = 0.0;
    if (o.trials > 0) {
      Rng mc = child.fork(1);
      const PayoffEstimate e = evaluate_payoff_mc(game, *sigma, *br.strategy, src, o.trials, mc);
      lambda = e.mean;
      ci = e.ci;
    }
    out << n << "," << f << "," << num(g) << "," << num(h) << "," << num(bound) << "," << num(lambda)
        << "," << num(ci) << "," << num(sigma->max_tv()) << "\n";
  }
  return kOk;
}

inline void cmd_region(const Options& o, std::ostream& out) {
  const StageGame g = game_from_json(read_json_file(o.game));
  const JointPmf src = joint_from_json(read_json_file(o.source));
  const EquilibriumRegion r = equilibrium_region(g, src, o.eps_a, o.eps_b, o.grid);
  out << nlohmann::json{{"lower", r.lower},
                        {"upper", r.upper},
                        {"empty", r.empty},
                        {"j_cav", r.j_cav},
                        {"j_vex", r.j_vex},
                        {"min_epsilon_sum", min_epsilon_sum(g, src, o.grid)}}
             .dump(2)
      << "\n";
}

inline void cmd_folk(const Options& o, std::ostream& out) {
  const StageGame g = game_from_json(read_json_file(o.game));
  const JointPmf src = joint_from_json(read_json_file(o.source));
  Rng rng(o.seed);
  FolkOptions fo;
  fo.grid = o.grid;
  fo.max_block = o.max_block;
  fo.max_cycle = o.max_cycle;
  if (o.punish_delta >= 0.0) fo.punish_delta = o.punish_delta;
  const FolkProfile p = construct_folk_profile(g, src, o.v, o.eps_a, o.eps_b, o.delta, o.blocks, rng, fo);
  const double ga = deviation_gain(g, p, Player::kAlice);
  const double gb = deviation_gain(g, p, Player::kBob);
  const double slack = 2.0 * g.max_abs() / p.n_blocks + 2.0 * p.delta_eff();
  nlohmann::json j = p.describe();
  j["audit"] = {{"on_path", on_path_payoff(g, p)},
                {"gain_a", ga},
                {"gain_b", gb},
                {"bound_a", o.eps_a + slack},
                {"bound_b", o.eps_b + slack},
                {"ok", ga <= o.eps_a + slack + 1e-12 && gb <= o.eps_b + slack + 1e-12}};
  j["alice"] = p.alice->describe();
  j["bob"] = p.bob->describe();
  out << j.dump(2) << "\n";
}

inline void cmd_autonomous(const Options& o, std::ostream& out) {
  const StageGame g = game_from_json(read_json_file(o.game));
  std::optional<JointPmf> src;
  if (!o.source.empty()) src = joint_from_json(read_json_file(o.source));
  double hx = o.h_x, hy = o.h_y;
  if (hx < 0.0 && src) hx = shannon_entropy(src->marginal_x());
  if (hy < 0.0 && src) hy = shannon_entropy(src->marginal_y());
  if (hx < 0.0 || hy < 0.0) throw ConfigError("need --h-x and --h-y or a --source");
  nlohmann::json j{{"h_x", hx}, {"h_y", hy}, {"mode", o.mode}};
  if (o.mode == "degenerate") {
    const DegenerateVerdict v = autonomous_feasible_degenerate(g, hx, hy, o.eps_a, o.eps_b, 0);
    j["feasible"] = v.feasible;
    j["min_excess"] = v.min_excess;
    j["min_gain_sum"] = v.min_gain_sum;
    j["atoms"] = v.atoms;
    j["certificate"] = v.certificate.to_json();
    out << j.dump(2) << "\n";
    return;
  }
  if (o.mode != "search" && o.mode != "build") throw ConfigError("mode must be search, degenerate or build");
  Rng rng(o.seed);
  AutonomousSearch cfg;
  cfg.restarts = o.restarts;
  cfg.steps = o.steps;
  Rng search_rng = rng.fork(0);
  const FeasibilityResult r = autonomous_feasible(g, hx, hy, o.eps_a, o.eps_b, search_rng, cfg);
  j["status"] = r.status;
  j["best_violation"] = r.best_violation;
  if (r.certificate) {
    j["origin"] = r.origin;
    j["certificate"] = r.certificate->to_json();
  }
  if (o.mode == "build") {
    if (!src) throw ConfigError("build needs a --source");
    if (!r.certificate) throw NotConstructible("no certificate found to build from");
    Rng build_rng = rng.fork(1);
    const Pmf px = src->marginal_x(), py = src->marginal_y();
    const AutonomousProfile p = build_autonomous_profile(g, px, py, *r.certificate, o.block_length,
                                                         o.blocks, build_rng);
    j["tv_a"] = p.tv_a;
    j["tv_b"] = p.tv_b;
    j["plan_value"] = p.plan_value;
    const bool independent = tv_distance(*src, JointPmf::independent(px, py)) < 1e-12;
    j["payoff"] = independent ? independent_autonomous_payoff(g, *p.alice, *p.bob, px, py)
                              : evaluate_payoff_exact(g, *p.alice, *p.bob, *src).mean;
    j["alice"] = p.alice->describe();
    j["bob"] = p.bob->describe();
  }
  out << j.dump(2) << "\n";
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Bounded-entropy repeated zero-sum games"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto game = [&](CLI::App* s) { s->add_option("--game", o.game, "game JSON")->required(); };
  auto source = [&](CLI::App* s, bool req) {
    auto* opt = s->add_option("--source", o.source, "source JSON");
    if (req) opt->required();
  };
  auto common = [&](CLI::App* s) {
    s->add_option("--out", o.out, "output file (stdout when empty)");
    s->add_option("--seed", o.seed, "RNG seed");
    s->add_option("--grid", o.grid, "entropy grid size")->check(CLI::Range(2, 1 << 20));
  };
  auto eps = [&](CLI::App* s) {
    s->add_option("--eps-a", o.eps_a)->check(CLI::NonNegativeNumber);
    s->add_option("--eps-b", o.eps_b)->check(CLI::NonNegativeNumber);
  };

  auto* entropy = app.add_subcommand("entropy", "Shannon and Renyi entropy table");
  source(entropy, true);
  common(entropy);
  entropy->add_option("--alpha-min", o.alpha_min);
  entropy->add_option("--alpha-max", o.alpha_max);
  entropy->add_option("--alpha-steps", o.alpha_steps);

  auto* envelope = app.add_subcommand("envelope", "security curve and envelope CSV");
  game(envelope);
  common(envelope);
  envelope->add_option("--player", o.player)->check(CLI::IsMember({"alice", "bob"}));

  auto* simulate = app.add_subcommand("simulate-source", "search a source simulator");
  source(simulate, true);
  common(simulate);
  simulate->add_option("--target", o.target, "target pmf JSON")->required();
  simulate->add_option("--n", o.n, "tuple length")->delimiter(',');
  simulate->add_option("--budget", o.budget, "sampled maps when not exhaustive");

  auto* rate = app.add_subcommand("rate", "bound versus payoff per horizon");
  game(rate);
  source(rate, true);
  common(rate);
  rate->add_option("--kind", o.kind)->check(CLI::IsMember({"causal", "noncausal", "exponential"}));
  rate->add_option("--n", o.n, "horizons, strictly increasing")->delimiter(',');
  rate->add_option("--trials", o.trials, "Monte Carlo trials (0 for exact)");
  rate->add_option("--f-n", o.f, "block count override (0 keeps the schedule)");
  rate->add_option("--g-n", o.g, "g override (negative keeps the schedule)");
  rate->add_option("--h-n", o.h, "h override (negative keeps the schedule)");

  auto* region = app.add_subcommand("region", "approximate equilibrium payoff region");
  game(region);
  source(region, true);
  common(region);
  eps(region);

  auto* folk = app.add_subcommand("folk", "construct and audit a cycle-and-punish profile");
  game(folk);
  source(folk, true);
  common(folk);
  eps(folk);
  folk->add_option("--v", o.v, "target payoff")->required();
  folk->add_option("--delta", o.delta)->check(CLI::NonNegativeNumber);
  folk->add_option("--blocks", o.blocks, "number of blocks N");
  folk->add_option("--punish-delta", o.punish_delta, "punishment slack target (negative uses delta)");
  folk->add_option("--max-block", o.max_block);
  folk->add_option("--max-cycle", o.max_cycle);

  auto* autonomous = app.add_subcommand("autonomous", "autonomous achievability");
  game(autonomous);
  source(autonomous, false);
  common(autonomous);
  eps(autonomous);
  autonomous->add_option("--mode", o.mode)->check(CLI::IsMember({"search", "degenerate", "build"}));
  autonomous->add_option("--h-x", o.h_x, "Alice's entropy (negative: from the source)");
  autonomous->add_option("--h-y", o.h_y, "Bob's entropy (negative: from the source)");
  autonomous->add_option("--restarts", o.restarts);
  autonomous->add_option("--steps", o.steps);
  autonomous->add_option("--blocks", o.blocks, "blocks L for build");
  autonomous->add_option("--block-length", o.block_length, "block length N for build");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = detail::expand_config(args);
    std::vector<const char*> ptrs;
    for (const auto& a : args) ptrs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    const nlohmann::json resolved = detail::resolved_config(*sub);
    if (o.out.empty()) {
      err << "resolved config: " << resolved.dump() << "\n";
    } else {
      std::ofstream(o.out + ".resolved.json") << resolved.dump(2) << "\n";
    }
    detail::Sink sink(o.out, out);
    const std::string name = sub->get_name();
    if (name == "entropy") detail::cmd_entropy(o, *sink);
    if (name == "envelope") detail::cmd_envelope(o, *sink);
    if (name == "simulate-source") detail::cmd_simulate(o, *sink);
    if (name == "rate") return detail::cmd_rate(o, *sink);
    if (name == "region") detail::cmd_region(o, *sink);
    if (name == "folk") detail::cmd_folk(o, *sink);
    if (name == "autonomous") detail::cmd_autonomous(o, *sink);
    return kOk;
  } catch (const EnumerationOverflow& e) {
    err << "enumeration overflow: " << e.what() << "\n";
    return kOverflow;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NotConstructible& e) {
    err << "not constructible: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  }
}

}  // namespace entgame::cli
