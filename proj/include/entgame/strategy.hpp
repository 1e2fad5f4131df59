#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "entgame/prob.hpp"
#include "entgame/source_sim.hpp"
#include "json.hpp"

namespace entgame {

// What a player sees before acting at stage t. The source span holds the
// prefix up to and including t for causal play and the full sequence for
// non-causal play; action spans hold stages before t.
struct History {
  std::span<const int> own_source;
  std::span<const int> own_actions;
  std::span<const int> opp_actions;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual int act(int t, const History& h) const = 0;
  // Autonomous strategies never read opponent actions.
  virtual bool autonomous() const = 0;
  virtual bool noncausal() const = 0;
  virtual int horizon() const = 0;
  virtual int num_actions() const = 0;
  virtual nlohmann::json describe() const = 0;
};

struct CodedBlock {
  int start = 0;
  int length = 0;
  int source_start = 0;
  int source_length = 0;
  int fixed_action = -1;  // >= 0 for blocks that ignore the source
  SimulatorMap map;       // source-window tuple -> action tuple
  int m = 0;              // stages targeted at the high-entropy pmf
  double tv = 0.0;
  double bound = 1.0;
  SearchMode mode = SearchMode::kExhaustive;
};

// Autonomous strategy: each block maps a window of the own source to an
// action tuple, or plays a fixed action.
class BlockCodedStrategy : public Strategy {
 public:
  BlockCodedStrategy(int horizon, int source_alphabet, int action_alphabet,
                     std::vector<CodedBlock> blocks)
      : n_(horizon), nx_(source_alphabet), na_(action_alphabet), blocks_(std::move(blocks)) {
    if (n_ < 1 || nx_ < 1 || na_ < 1) throw std::invalid_argument("BlockCodedStrategy: bad sizes");
    int next = 0;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const CodedBlock& b = blocks_[i];
      if (b.start != next || b.length < 1)
        throw std::invalid_argument("BlockCodedStrategy: blocks must tile the horizon");
      next += b.length;
      for (int k = 0; k < b.length; ++k) block_of_.push_back(static_cast<int>(i));
      if (b.fixed_action >= 0) {
        if (b.fixed_action >= na_) throw std::invalid_argument("BlockCodedStrategy: bad action");
        continue;
      }
      if (b.source_start < 0 || b.source_length < 1 || b.source_start + b.source_length > n_)
        throw std::invalid_argument("BlockCodedStrategy: bad source window");
      if (b.map.domain != static_cast<int>(checked_pow(nx_, b.source_length, 1u << 30)) ||
          b.map.codomain != static_cast<int>(checked_pow(na_, b.length, 1u << 30)))
        throw std::invalid_argument("BlockCodedStrategy: map shape mismatch");
      if (b.source_start + b.source_length > b.start + 1) noncausal_ = true;
    }
    if (next != n_) throw std::invalid_argument("BlockCodedStrategy: blocks must tile the horizon");
  }

  int act(int t, const History& h) const override {
    const CodedBlock& b = blocks_[block_of_.at(t)];
    if (b.fixed_action >= 0) return b.fixed_action;
    const auto win = h.own_source.subspan(b.source_start, b.source_length);
    const int tuple = b.map.table[encode_tuple(win, nx_)];
    int div = 1;
    for (int k = t - b.start + 1; k < b.length; ++k) div *= na_;
    return (tuple / div) % na_;
  }

  bool autonomous() const override { return true; }
  bool noncausal() const override { return noncausal_; }
  int horizon() const override { return n_; }
  int num_actions() const override { return na_; }
  int source_alphabet() const { return nx_; }
  const std::vector<CodedBlock>& blocks() const { return blocks_; }

  double max_tv() const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, b.tv);
    return m;
  }

  nlohmann::json describe() const override {
    nlohmann::json j;
    j["type"] = "block_coded";
    j["horizon"] = n_;
    j["noncausal"] = noncausal_;
    j["source_alphabet"] = nx_;
    j["action_alphabet"] = na_;
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : blocks_) {
      nlohmann::json e{{"start", b.start}, {"length", b.length}};
      if (b.fixed_action >= 0) {
        e["fixed_action"] = b.fixed_action;
      } else {
        e["source_start"] = b.source_start;
        e["source_length"] = b.source_length;
        e["m"] = b.m;
        e["tv"] = b.tv;
        e["bound"] = b.bound;
        e["mode"] = to_string(b.mode);
        e["table"] = b.map.table;
      }
      j["blocks"].push_back(std::move(e));
    }
    return j;
  }

 private:
  int n_, nx_, na_;
  std::vector<CodedBlock> blocks_;
  std::vector<int> block_of_;
  bool noncausal_ = false;
};

// Per-stage lookup keyed by an own-source window and the opponent's actions
// since a given stage.
struct ResponseRule {
  int source_start = 0;
  int source_length = 0;
  int opp_start = 0;
  std::vector<int> dense;
  std::unordered_map<std::uint64_t, int> sparse;
  int fallback = 0;
};

class ResponseStrategy : public Strategy {
 public:
  ResponseStrategy(int source_alphabet, int opp_actions, int own_actions, bool noncausal,
                   std::vector<ResponseRule> rules)
      : ny_(source_alphabet), nopp_(opp_actions), nown_(own_actions), noncausal_(noncausal),
        rules_(std::move(rules)) {}

  int act(int t, const History& h) const override {
    const ResponseRule& r = rules_.at(t);
    std::uint64_t key = encode_tuple(h.own_source.subspan(r.source_start, r.source_length), ny_);
    for (int s = r.opp_start; s < t; ++s) key = key * nopp_ + h.opp_actions[s];
    if (!r.dense.empty()) return key < r.dense.size() ? r.dense[key] : r.fallback;
    const auto it = r.sparse.find(key);
    return it == r.sparse.end() ? r.fallback : it->second;
  }

  bool autonomous() const override { return false; }
  bool noncausal() const override { return noncausal_; }
  int horizon() const override { return static_cast<int>(rules_.size()); }
  int num_actions() const override { return nown_; }

  nlohmann::json describe() const override {
    nlohmann::json j{{"type", "best_response"}, {"horizon", horizon()}, {"noncausal", noncausal_}};
    j["stages"] = nlohmann::json::array();
    for (const auto& r : rules_)
      j["stages"].push_back({{"source_start", r.source_start},
                             {"source_length", r.source_length},
                             {"opp_start", r.opp_start},
                             {"entries", r.dense.empty() ? r.sparse.size() : r.dense.size()}});
    return j;
  }

 private:
  int ny_, nopp_, nown_;
  bool noncausal_;
  std::vector<ResponseRule> rules_;
};

// Plays a fixed cycle; after an opponent deviation, switches to the
// punishment strategy from the next block of length K on, restarted in
// each block.
class GrimTriggerStrategy : public Strategy {
 public:
  GrimTriggerStrategy(std::vector<int> own_cycle, std::vector<int> opp_cycle, int blocks,
                      int num_actions, std::shared_ptr<const Strategy> punishment)
      : own_(std::move(own_cycle)), opp_(std::move(opp_cycle)), blocks_(blocks),
        na_(num_actions), pun_(std::move(punishment)) {
    if (own_.empty() || own_.size() != opp_.size() || blocks_ < 1)
      throw std::invalid_argument("GrimTriggerStrategy: bad cycle");
    if (!pun_ || pun_->horizon() != static_cast<int>(own_.size()) || pun_->noncausal())
      throw std::invalid_argument("GrimTriggerStrategy: punishment must be causal with horizon K");
  }

  int act(int t, const History& h) const override {
    const int k = block_length();
    const int block = t / k, s0 = block * k;
    int dev = -1;
    for (int s = 0; s < s0; ++s)
      if (h.opp_actions[s] != opp_[s % k]) {
        dev = s;
        break;
      }
    if (dev < 0) return own_[t % k];
    const History sub{h.own_source.subspan(s0, t - s0 + 1), h.own_actions.subspan(s0, t - s0),
                      h.opp_actions.subspan(s0, t - s0)};
    return pun_->act(t - s0, sub);
  }

  bool autonomous() const override { return false; }
  bool noncausal() const override { return false; }
  int horizon() const override { return block_length() * blocks_; }
  int num_actions() const override { return na_; }
  int block_length() const { return static_cast<int>(own_.size()); }
  const Strategy& punishment() const { return *pun_; }

  nlohmann::json describe() const override {
    return {{"type", "grim_trigger"}, {"block_length", block_length()}, {"blocks", blocks_},
            {"own_cycle", own_},      {"opp_cycle", opp_},               {"punishment", pun_->describe()}};
  }

 private:
  std::vector<int> own_, opp_;
  int blocks_, na_;
  std::shared_ptr<const Strategy> pun_;
};

}  // namespace entgame
