#pragma once

// Random small corpora for property tests, plus a from-the-records check of
// whether refinement can be exact for a corpus.

#include "malflows/corpus.hpp"
#include "malflows/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace malflows::testing {

struct RandomCorpusOptions {
    std::size_t max_apps = 20;
    std::size_t max_entities = 8;  // per kind
    // Probability that an app attaches the full known successor set to an
    // anchor it has, instead of a random subset. 1.0 keeps corpora consistent.
    double full_successors = 0.0;
};

inline std::string tok(const char* prefix, std::uint64_t i) { return prefix + std::to_string(i); }

inline std::vector<std::string> random_subset(Rng& rng, const std::vector<std::string>& pool, std::size_t max) {
    std::vector<std::string> out;
    const std::size_t n = uniform_index(rng, max + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = pool[uniform_index(rng, pool.size())];
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
}

inline Corpus random_corpus(Rng& rng, const RandomCorpusOptions& o = {}) {
    const std::size_t apps = 1 + uniform_index(rng, o.max_apps);
    auto pool = [&](const char* prefix) {
        std::vector<std::string> p;
        const std::size_t n = 1 + uniform_index(rng, o.max_entities);
        for (std::size_t i = 0; i < n; ++i) p.push_back(tok(prefix, i));
        return p;
    };
    const auto conds = pool("C");
    const auto apis = pool("api.");
    const auto actions = pool("ACT_");
    const auto comps = pool("comp.");

    // Successor sets shared by all apps that take the full set.
    std::map<std::string, std::vector<std::string>> guards, sinks, comp_actions;
    for (const auto& c : conds) guards[c] = random_subset(rng, apis, 3);
    for (const auto& a : apis) sinks[a] = random_subset(rng, apis, 2);
    for (const auto& c : comps) comp_actions[c] = random_subset(rng, actions, 3);
    auto successors = [&](const std::vector<std::string>& full, const std::vector<std::string>& pool_) {
        return uniform_unit(rng) < o.full_successors ? full : random_subset(rng, pool_, 3);
    };

    Corpus corpus;
    for (std::size_t i = 0; i < apps; ++i) {
        AppFlowRecord r;
        r.app_id = tok("app", i);
        r.label = static_cast<int>(uniform_index(rng, 2));
        for (const auto& c : random_subset(rng, conds, 3)) r.conditions.push_back({c, successors(guards[c], apis)});
        for (const auto& src : random_subset(rng, apis, 2)) {
            for (const auto& snk : successors(sinks[src], apis)) r.dataflows.push_back({src, snk});
        }
        for (const auto& c : random_subset(rng, comps, 2)) {
            r.icc.push_back({c, static_cast<ComponentKind>(uniform_index(rng, 4)), successors(comp_actions[c], actions)});
        }
        r.extra_actions = random_subset(rng, actions, 2);
        corpus.push_back(std::move(r));
    }
    return corpus;
}

// APIs an app uses: guarded, source or sink.
inline std::set<std::string> used_apis(const AppFlowRecord& r) {
    std::set<std::string> s;
    for (const auto& c : r.conditions) s.insert(c.guarded_apis.begin(), c.guarded_apis.end());
    for (const auto& f : r.dataflows) {
        s.insert(f.source);
        s.insert(f.sink);
    }
    return s;
}

inline std::set<std::string> set_actions(const AppFlowRecord& r) {
    std::set<std::string> s(r.extra_actions.begin(), r.extra_actions.end());
    for (const auto& c : r.icc) s.insert(c.actions.begin(), c.actions.end());
    return s;
}

// A corpus is collision-free for a view when no app holds an anchor whose
// successor (taken from any app) the app reaches through the content relation
// without recording it under that anchor itself.
inline bool collision_free_cf(const Corpus& corpus) {
    std::map<std::string, std::set<std::string>> all;
    for (const auto& r : corpus)
        for (const auto& c : r.conditions) all[c.semantic].insert(c.guarded_apis.begin(), c.guarded_apis.end());
    for (const auto& r : corpus) {
        const auto used = used_apis(r);
        for (const auto& c : r.conditions) {
            for (const auto& s : all[c.semantic]) {
                const bool own = std::find(c.guarded_apis.begin(), c.guarded_apis.end(), s) != c.guarded_apis.end();
                if (used.count(s) && !own) return false;
            }
        }
    }
    return true;
}

inline bool collision_free_df(const Corpus& corpus) {
    std::map<std::string, std::set<std::string>> all;
    for (const auto& r : corpus)
        for (const auto& f : r.dataflows) all[f.source].insert(f.sink);
    for (const auto& r : corpus) {
        const auto used = used_apis(r);
        std::set<std::pair<std::string, std::string>> own;
        for (const auto& f : r.dataflows) own.emplace(f.source, f.sink);
        for (const auto& src : used) {
            auto it = all.find(src);
            if (it == all.end()) continue;
            for (const auto& s : it->second) {
                if (used.count(s) && !own.count({src, s})) return false;
            }
        }
    }
    return true;
}

inline bool collision_free_icc(const Corpus& corpus) {
    std::map<std::string, std::set<std::string>> all;
    for (const auto& r : corpus)
        for (const auto& c : r.icc) all[c.name].insert(c.actions.begin(), c.actions.end());
    for (const auto& r : corpus) {
        const auto set = set_actions(r);
        for (const auto& c : r.icc) {
            for (const auto& s : all[c.name]) {
                const bool own = std::find(c.actions.begin(), c.actions.end(), s) != c.actions.end();
                if (set.count(s) && !own) return false;
            }
        }
    }
    return true;
}

inline bool collision_free(const Corpus& corpus) {
    return collision_free_cf(corpus) && collision_free_df(corpus) && collision_free_icc(corpus);
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("malflows_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace malflows::testing
