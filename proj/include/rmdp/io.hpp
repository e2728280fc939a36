#pragma once

#include "rmdp/mdp.hpp"

#include <json.hpp>

#include <string>

namespace rmdp {

/**
 * MDP file schema (JSON):
 *
 *   {
 *     "num_states": S, "num_actions": A, "gamma": g,
 *     "reward": [S*A values, row-major (s, a)],
 *     "transition": [S*A rows of S values, row (s*A + a)]   // or one flat array of S*A*S
 *     "mu": [S values],
 *     "r_max": 1.0                                           // optional
 *   }
 *
 * The loader reports the first violated invariant with its indices.
 */
TabularMdp mdp_from_json(const nlohmann::json& doc);
nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp load_mdp(const std::string& path);
void save_mdp(const TabularMdp& mdp, const std::string& path);

/// {"num_states": S, "num_actions": A, "probs": [[...], ...]}
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc);

} // namespace rmdp
