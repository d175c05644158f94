#pragma once

// Candidate node-set construction: the gold types plus floor(ratio * |gold|)
// distractors sampled uniformly without replacement from the rest of the KB,
// presented in a seeded shuffle so gold membership is not positional.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfkit/error.hpp"
#include "wfkit/kb.hpp"
#include "wfkit/rng.hpp"

namespace wfkit {

struct CandidateSet {
    std::set<std::string> gold;
    std::set<std::string> distractors;
    std::uint64_t seed = 0;
    std::vector<std::string> order;  // shuffled presentation of gold + distractors

    std::set<std::string> all() const {
        std::set<std::string> u = gold;
        u.insert(distractors.begin(), distractors.end());
        return u;
    }

    bool contains(const std::string& name) const {
        return gold.count(name) != 0 || distractors.count(name) != 0;
    }

    bool operator==(const CandidateSet&) const = default;
};

inline CandidateSet build_candidate_set(const std::set<std::string>& gold, const NodeKB& kb,
                                        double ratio = 0.8, std::uint64_t seed = 0) {
    if (ratio < 0) throw Error("candidate ratio must be nonnegative");
    std::vector<std::string> offenders;
    for (const std::string& g : gold) {
        if (!kb.contains(g)) offenders.push_back(g);
    }
    if (!offenders.empty()) throw GoldNotInKb(offenders);

    std::vector<std::string> pool;  // KB \ gold, sorted by construction
    for (const auto& [name, spec] : kb.specs) {
        if (!gold.count(name)) pool.push_back(name);
    }

    const std::size_t want = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(gold.size())));
    const std::size_t take = std::min(want, pool.size());

    CandidateSet out;
    out.gold = gold;
    out.seed = seed;

    // Partial Fisher-Yates over the sorted pool: the first `take` slots end up
    // a uniform sample without replacement.
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.distractors.insert(pool[i]);
    }

    out.order.assign(gold.begin(), gold.end());
    out.order.insert(out.order.end(), out.distractors.begin(), out.distractors.end());
    std::sort(out.order.begin(), out.order.end());
    rng.shuffle(out.order);
    return out;
}

inline nlohmann::ordered_json candidate_to_json(const CandidateSet& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["gold"] = c.gold;
    j["distractors"] = c.distractors;
    j["order"] = c.order;
    return j;
}

inline CandidateSet candidate_from_json(const nlohmann::json& j) {
    CandidateSet c;
    c.seed = j.value("seed", std::uint64_t{0});
    for (const auto& g : j.at("gold")) c.gold.insert(g.get<std::string>());
    if (j.contains("distractors")) {
        for (const auto& d : j.at("distractors")) c.distractors.insert(d.get<std::string>());
    }
    if (j.contains("order")) {
        for (const auto& o : j.at("order")) c.order.push_back(o.get<std::string>());
    }
    return c;
}

}  // namespace wfkit
