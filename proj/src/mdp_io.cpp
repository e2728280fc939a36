#include "rmdp/io.hpp"

#include "rmdp/errors.hpp"

#include <fstream>

namespace rmdp {

using nlohmann::json;

namespace {

const json& field(const json& doc, const char* name) {
    if (!doc.contains(name))
        throw InvariantError(std::string("mdp file: missing field '") + name + "'");
    return doc.at(name);
}

std::vector<double> numbers(const json& arr, const std::string& what) {
    if (!arr.is_array())
        throw InvariantError("mdp file: '" + what + "' must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number())
            throw InvariantError("mdp file: " + what + "[" + std::to_string(i) + "] is not a number");
        out.push_back(arr[i].get<double>());
    }
    return out;
}

} // namespace

TabularMdp mdp_from_json(const json& doc) {
    const auto S = field(doc, "num_states").get<std::size_t>();
    const auto A = field(doc, "num_actions").get<std::size_t>();
    const double gamma = field(doc, "gamma").get<double>();
    std::vector<double> reward = numbers(field(doc, "reward"), "reward");
    const json& tr = field(doc, "transition");
    std::vector<double> transition;
    if (tr.is_array() && !tr.empty() && tr[0].is_array()) {
        if (tr.size() != S * A)
            throw ShapeError("mdp file: transition has " + std::to_string(tr.size()) + " rows, expected " +
                             std::to_string(S * A));
        transition.reserve(S * A * S);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            auto row = numbers(tr[i], "transition[" + std::to_string(i) + "]");
            if (row.size() != S)
                throw ShapeError("mdp file: transition row " + std::to_string(i) + " (s=" + std::to_string(i / A) +
                                 ", a=" + std::to_string(i % A) + ") has " + std::to_string(row.size()) +
                                 " entries, expected " + std::to_string(S));
            transition.insert(transition.end(), row.begin(), row.end());
        }
    } else {
        transition = numbers(tr, "transition");
    }
    std::vector<double> mu = numbers(field(doc, "mu"), "mu");
    const double r_max = doc.contains("r_max") ? doc.at("r_max").get<double>() : 1.0;
    return {S, A, std::move(reward), std::move(transition), gamma, std::move(mu), r_max};
}

json mdp_to_json(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    json tr = json::array();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            auto row = mdp.transition(s, a);
            tr.push_back(std::vector<double>(row.begin(), row.end()));
        }
    auto r = mdp.rewards();
    return json{{"num_states", S},
                {"num_actions", A},
                {"gamma", mdp.discount()},
                {"reward", std::vector<double>(r.begin(), r.end())},
                {"transition", std::move(tr)},
                {"mu", mdp.initial_dist()},
                {"r_max", mdp.r_max()}};
}

TabularMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvariantError("cannot open mdp file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw InvariantError("mdp file '" + path + "': " + e.what());
    }
    return mdp_from_json(doc);
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw InvariantError("cannot write mdp file '" + path + "'");
    out << mdp_to_json(mdp).dump(2) << '\n';
}

json policy_to_json(const Policy& policy) {
    json rows = json::array();
    for (std::size_t s = 0; s < policy.num_states(); ++s) {
        auto r = policy.row(s);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return json{{"num_states", policy.num_states()}, {"num_actions", policy.num_actions()}, {"probs", rows}};
}

Policy policy_from_json(const json& doc) {
    const auto S = doc.at("num_states").get<std::size_t>();
    const auto A = doc.at("num_actions").get<std::size_t>();
    std::vector<double> p;
    for (const auto& row : doc.at("probs"))
        for (const auto& x : row) p.push_back(x.get<double>());
    return {S, A, std::move(p)};
}

} // namespace rmdp
