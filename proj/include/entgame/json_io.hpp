#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "entgame/error.hpp"
#include "entgame/prob.hpp"
#include "entgame/stage_game.hpp"
#include "json.hpp"

namespace entgame {

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace detail {

template <class T, class F>
T convert(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace detail

// {"payoffs": [[...], ...]}, rows indexed by Alice's actions.
inline StageGame game_from_json(const nlohmann::json& j) {
  return detail::convert<StageGame>("game", [&] {
    return StageGame(j.at("payoffs").get<std::vector<std::vector<double>>>());
  });
}

// {"probs": [...]} or a bare array.
inline Pmf pmf_from_json(const nlohmann::json& j) {
  return detail::convert<Pmf>("pmf", [&] {
    const auto& v = j.is_object() ? j.at("probs") : j;
    return Pmf(v.get<std::vector<double>>());
  });
}

// {"joint": [[...], ...]}, rows indexed by x and columns by y.
inline JointPmf joint_from_json(const nlohmann::json& j) {
  return detail::convert<JointPmf>("joint", [&] {
    return JointPmf::from_rows(j.at("joint").get<std::vector<std::vector<double>>>());
  });
}

inline nlohmann::json to_json(const Pmf& p) { return {{"probs", p.probs()}}; }

inline nlohmann::json to_json(const JointPmf& j) {
  nlohmann::json rows = nlohmann::json::array();
  for (int x = 0; x < j.x_size(); ++x) {
    std::vector<double> r;
    for (int y = 0; y < j.y_size(); ++y) r.push_back(j(x, y));
    rows.push_back(r);
  }
  return {{"joint", rows}};
}

}  // namespace entgame
