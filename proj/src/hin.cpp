#include "malflows/hin.hpp"

#include "malflows/error.hpp"
#include "malflows/metapath.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace malflows {

using nlohmann::json;

namespace {

constexpr std::array<Relation, 2> kCfRelations{Relation::Include, Relation::Trigger};
constexpr std::array<Relation, 2> kDfRelations{Relation::Use, Relation::Flow};
constexpr std::array<Relation, 3> kIccRelations{Relation::Set, Relation::Declare, Relation::Initiate};

}  // namespace

std::string_view to_string(View v) {
    switch (v) {
        case View::CF: return "cf";
        case View::DF: return "df";
        case View::ICC: return "icc";
    }
    return "?";
}

std::optional<View> parse_view(std::string_view s) {
    if (s == "cf" || s == "CF") return View::CF;
    if (s == "df" || s == "DF") return View::DF;
    if (s == "icc" || s == "ICC") return View::ICC;
    return std::nullopt;
}

std::span<const Relation> view_relations(View v) {
    switch (v) {
        case View::CF: return kCfRelations;
        case View::DF: return kDfRelations;
        case View::ICC: return kIccRelations;
    }
    return {};
}

Hin::Hin(View view, std::vector<HinNode> nodes, std::vector<HinEdge> edges) : view_(view) {
    const auto n = static_cast<std::uint32_t>(nodes.size());
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return nodes[a] < nodes[b]; });
    std::vector<std::uint32_t> remap(n);
    nodes_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (i > 0 && nodes[order[i]] == nodes_.back()) {
            throw Error("duplicate HIN node '" + nodes[order[i]].token + "'");
        }
        remap[order[i]] = i;
        nodes_.push_back(std::move(nodes[order[i]]));
    }

    for (auto& e : edges) {
        if (e.src >= n || e.dst >= n) throw Error("HIN edge endpoint out of range");
        e.src = remap[e.src];
        e.dst = remap[e.dst];
    }
    auto key = [](const HinEdge& e) { return std::tuple(e.rel, e.src, e.dst); };
    std::sort(edges.begin(), edges.end(),
              [&](const HinEdge& a, const HinEdge& b) { return key(a) < key(b); });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    for (std::size_t r = 0; r < kRelations; ++r) {
        for (std::size_t d = 0; d < 2; ++d) {
            Csr& csr = adjacency_[r * 2 + d];
            csr.offsets.assign(n + 1, 0);
            for (const auto& e : edges_) {
                if (static_cast<std::size_t>(e.rel) != r) continue;
                ++csr.offsets[(d == 0 ? e.src : e.dst) + 1];
            }
            std::partial_sum(csr.offsets.begin(), csr.offsets.end(), csr.offsets.begin());
            csr.targets.resize(csr.offsets[n]);
            std::vector<std::uint32_t> fill(csr.offsets.begin(), csr.offsets.end() - 1);
            for (const auto& e : edges_) {
                if (static_cast<std::size_t>(e.rel) != r) continue;
                const auto from = d == 0 ? e.src : e.dst;
                csr.targets[fill[from]++] = d == 0 ? e.dst : e.src;
            }
            for (std::uint32_t v = 0; v < n; ++v) {
                std::sort(csr.targets.begin() + csr.offsets[v], csr.targets.begin() + csr.offsets[v + 1]);
            }
        }
    }
}

std::span<const std::uint32_t> Hin::neighbors(std::uint32_t node, Relation rel, Direction dir) const {
    const Csr& c = csr(rel, dir);
    if (c.offsets.empty()) return {};
    return std::span<const std::uint32_t>(c.targets).subspan(c.offsets[node],
                                                              c.offsets[node + 1] - c.offsets[node]);
}

bool Hin::has_edge(std::uint32_t src, std::uint32_t dst, Relation rel) const {
    if (src >= nodes_.size() || dst >= nodes_.size()) return false;
    auto out = neighbors(src, rel, Direction::Forward);
    return std::binary_search(out.begin(), out.end(), dst);
}

std::optional<std::uint32_t> Hin::find(EntityKind kind, std::string_view token,
                                       const std::optional<std::string>& context) const {
    HinNode probe{kind, std::string(token), context};
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), probe);
    if (it == nodes_.end() || *it != probe) return std::nullopt;
    return static_cast<std::uint32_t>(it - nodes_.begin());
}

std::vector<std::uint32_t> Hin::nodes_of_kind(EntityKind kind) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == kind) out.push_back(i);
    }
    return out;
}

Hin build_view_hin(const CorpusIndex& index, View view) {
    const auto& ent = index.entities;
    const auto& rel = index.relations;

    std::vector<HinNode> nodes;
    std::map<std::pair<EntityKind, std::uint32_t>, std::uint32_t> ids;
    auto node = [&](EntityKind kind, std::uint32_t entity) {
        auto [it, inserted] = ids.emplace(std::pair(kind, entity), static_cast<std::uint32_t>(nodes.size()));
        if (inserted) nodes.push_back({kind, ent[kind].token(entity), std::nullopt});
        return it->second;
    };

    std::vector<HinEdge> edges;
    for (Relation r : view_relations(view)) {
        const auto sig = signature(r);
        for (const auto& [a, b] : rel[r]) {
            edges.push_back({node(sig.src, a), node(sig.dst, b), r});
        }
    }
    return Hin(view, std::move(nodes), std::move(edges));
}

RefinementConfig refinement_config(const MetaPathGroup& group) {
    const MetaPath* action = group.action();
    if (action == nullptr) throw Error("group " + group.name + " has no action-oriented meta-path");
    if (action->kinds.size() < 4) {
        throw Error("action meta-path " + action->name + " is too short to anchor refinement");
    }
    RefinementConfig cfg;
    cfg.view = group.view;
    cfg.anchor_kind = action->kinds[1];
    cfg.content_relation = action->steps[0].rel;
    cfg.action_relation = action->steps[1].rel;
    const EntityKind target = action->kinds[2];
    bool found = false;
    for (std::size_t r = 0; r < kRelations; ++r) {
        const auto sig = signature(static_cast<Relation>(r));
        if (sig.src == EntityKind::App && sig.dst == target) {
            cfg.constraint_relation = static_cast<Relation>(r);
            found = true;
        }
    }
    if (!found) throw Error("no content relation links App to " + std::string(to_string(target)));
    return cfg;
}

RefinementConfig refinement_config(View view) {
    for (const auto& g : builtin_groups()) {
        if (g.view == view) return refinement_config(g);
    }
    throw Error("no builtin group for view");
}

Hin refine_hin(const Hin& h, const RefinementConfig& cfg, const CorpusIndex& index) {
    if (h.view() != cfg.view) {
        throw Error("refinement config for view " + std::string(to_string(cfg.view)) +
                    " applied to a " + std::string(to_string(h.view())) + " graph");
    }
    const auto& ent = index.entities;
    const auto constraint_sig = signature(cfg.constraint_relation);
    auto admissible = [&](const HinNode& app, const HinNode& target) {
        if (target.kind != constraint_sig.dst) return false;
        auto a = ent[EntityKind::App].find(app.token);
        auto t = ent[constraint_sig.dst].find(target.token);
        return a && t && index.relations.contains(cfg.constraint_relation, *a, *t);
    };

    const auto n = static_cast<std::uint32_t>(h.size());
    std::vector<bool> is_anchor(n, false);
    for (std::uint32_t v = 0; v < n; ++v) {
        is_anchor[v] = h.node(v).kind == cfg.anchor_kind &&
                       !h.neighbors(v, cfg.action_relation, Direction::Forward).empty();
    }

    std::vector<HinNode> nodes;
    std::vector<std::uint32_t> kept(n, 0);
    for (std::uint32_t v = 0; v < n; ++v) {
        if (is_anchor[v]) continue;
        kept[v] = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back(h.node(v));
    }

    // One clone per (anchor, app predecessor).
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> clones;
    for (std::uint32_t v = 0; v < n; ++v) {
        if (!is_anchor[v]) continue;
        for (std::uint32_t p : h.neighbors(v, cfg.content_relation, Direction::Inverse)) {
            if (h.node(p).kind != EntityKind::App) continue;
            clones.emplace(std::pair(v, p), static_cast<std::uint32_t>(nodes.size()));
            nodes.push_back({h.node(v).kind, h.node(v).token, h.node(p).token});
        }
    }

    std::vector<HinEdge> edges;
    for (const auto& e : h.edges()) {
        if (is_anchor[e.src] || is_anchor[e.dst]) continue;
        edges.push_back({kept[e.src], kept[e.dst], e.rel});
    }
    for (const auto& [key, clone] : clones) {
        const auto [anchor, app] = key;
        edges.push_back({kept[app], clone, cfg.content_relation});
        for (std::uint32_t s : h.neighbors(anchor, cfg.action_relation, Direction::Forward)) {
            if (!admissible(h.node(app), h.node(s))) continue;
            if (!is_anchor[s]) {
                edges.push_back({clone, kept[s], cfg.action_relation});
            } else if (auto it = clones.find({s, app}); it != clones.end()) {
                // The successor is itself an anchor: link to this app's own instance.
                edges.push_back({clone, it->second, cfg.action_relation});
            }
        }
    }
    return Hin(h.view(), std::move(nodes), std::move(edges));
}

Hin oracle_refined_hin(const Corpus& corpus, View view) {
    std::vector<HinNode> nodes;
    std::map<HinNode, std::uint32_t> ids;
    std::set<std::tuple<Relation, std::uint32_t, std::uint32_t>> edge_set;
    auto node = [&](EntityKind kind, const std::string& token, std::optional<std::string> ctx = {}) {
        HinNode key{kind, token, std::move(ctx)};
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(nodes.size());
        ids.emplace(key, id);
        nodes.push_back(std::move(key));
        return id;
    };
    auto edge = [&](std::uint32_t a, std::uint32_t b, Relation r) { edge_set.emplace(r, a, b); };

    std::set<std::string> anchors;
    switch (view) {
        case View::CF:
            for (const auto& r : corpus)
                for (const auto& c : r.conditions)
                    if (!c.guarded_apis.empty()) anchors.insert(c.semantic);
            for (const auto& r : corpus) {
                if (r.conditions.empty()) continue;
                const auto app = node(EntityKind::App, r.app_id);
                for (const auto& c : r.conditions) {
                    const bool anchored = anchors.count(c.semantic) != 0;
                    const auto cond = anchored ? node(EntityKind::Condition, c.semantic, r.app_id)
                                               : node(EntityKind::Condition, c.semantic);
                    edge(app, cond, Relation::Include);
                    for (const auto& api : c.guarded_apis) {
                        edge(cond, node(EntityKind::Api, api), Relation::Trigger);
                    }
                }
            }
            break;
        case View::DF:
            for (const auto& r : corpus)
                for (const auto& f : r.dataflows) anchors.insert(f.source);
            for (const auto& r : corpus) {
                std::set<std::string> used;
                for (const auto& c : r.conditions) used.insert(c.guarded_apis.begin(), c.guarded_apis.end());
                for (const auto& f : r.dataflows) {
                    used.insert(f.source);
                    used.insert(f.sink);
                }
                if (used.empty()) continue;
                const auto app = node(EntityKind::App, r.app_id);
                auto api_node = [&](const std::string& api) {
                    return anchors.count(api) ? node(EntityKind::Api, api, r.app_id)
                                              : node(EntityKind::Api, api);
                };
                for (const auto& api : used) edge(app, api_node(api), Relation::Use);
                for (const auto& f : r.dataflows) {
                    edge(api_node(f.source), api_node(f.sink), Relation::Flow);
                }
            }
            break;
        case View::ICC:
            for (const auto& r : corpus)
                for (const auto& c : r.icc)
                    if (!c.actions.empty()) anchors.insert(c.name);
            for (const auto& r : corpus) {
                if (r.icc.empty() && r.extra_actions.empty()) continue;
                const auto app = node(EntityKind::App, r.app_id);
                for (const auto& a : r.extra_actions) edge(app, node(EntityKind::Action, a), Relation::Set);
                for (const auto& c : r.icc) {
                    const auto comp = anchors.count(c.name) ? node(EntityKind::Component, c.name, r.app_id)
                                                            : node(EntityKind::Component, c.name);
                    edge(app, comp, Relation::Declare);
                    for (const auto& a : c.actions) {
                        const auto act = node(EntityKind::Action, a);
                        edge(app, act, Relation::Set);
                        edge(comp, act, Relation::Initiate);
                    }
                }
            }
            break;
    }

    std::vector<HinEdge> edges;
    for (const auto& [r, a, b] : edge_set) edges.push_back({a, b, r});
    return Hin(view, std::move(nodes), std::move(edges));
}

std::vector<std::string> validate_schema(const Hin& h) {
    std::vector<std::string> violations;
    auto describe = [&](std::uint32_t id) {
        const auto& n = h.node(id);
        std::string s = std::string(to_string(n.kind)) + ":" + n.token;
        if (n.context) s += "@" + *n.context;
        return s;
    };
    for (const auto& e : h.edges()) {
        const auto sig = signature(e.rel);
        if (h.node(e.src).kind != sig.src || h.node(e.dst).kind != sig.dst) {
            violations.push_back("edge " + describe(e.src) + " -" + std::string(to_string(e.rel)) +
                                 "-> " + describe(e.dst) + " does not match signature " +
                                 std::string(to_string(sig.src)) + "->" +
                                 std::string(to_string(sig.dst)));
        }
    }
    for (std::uint32_t v = 0; v < h.size(); ++v) {
        const auto& n = h.node(v);
        if (!n.context) continue;
        if (n.kind == EntityKind::App) {
            violations.push_back("app node " + describe(v) + " carries a context");
            continue;
        }
        std::set<std::uint32_t> apps;
        for (std::size_t r = 0; r < kRelations; ++r) {
            for (std::uint32_t p : h.neighbors(v, static_cast<Relation>(r), Direction::Inverse)) {
                if (h.node(p).kind == EntityKind::App) apps.insert(p);
            }
        }
        const auto owner = h.find(EntityKind::App, *n.context);
        if (apps.size() != 1 || !owner || *apps.begin() != *owner) {
            violations.push_back("clone " + describe(v) + " is linked to " + std::to_string(apps.size()) +
                                 " app(s) instead of exactly its context app");
        }
    }
    return violations;
}

std::string hin_to_json(const Hin& h, const std::string& meta_json) {
    json j;
    j["view"] = std::string(to_string(h.view()));
    j["meta"] = json::parse(meta_json);
    j["nodes"] = json::array();
    for (std::uint32_t i = 0; i < h.size(); ++i) {
        const auto& n = h.node(i);
        json node{{"id", i}, {"kind", std::string(to_string(n.kind))}, {"token", n.token}};
        if (n.context) node["context"] = *n.context;
        j["nodes"].push_back(std::move(node));
    }
    j["edges"] = json::array();
    for (const auto& e : h.edges()) {
        j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"rel", std::string(to_string(e.rel))}});
    }
    return j.dump(1);
}

Hin hin_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed graph document: ") + e.what(), 0, e.byte);
    }
    try {
        auto view = parse_view(j.at("view").get<std::string>());
        if (!view) throw SchemaError("graph document has unknown view");
        const auto& jn = j.at("nodes");
        std::vector<HinNode> nodes(jn.size());
        std::vector<bool> seen(jn.size(), false);
        for (const auto& n : jn) {
            const auto id = n.at("id").get<std::size_t>();
            if (id >= nodes.size() || seen[id]) throw SchemaError("graph node ids must be dense and unique");
            seen[id] = true;
            auto kind = parse_entity_kind(n.at("kind").get<std::string>());
            if (!kind) throw SchemaError("unknown node kind in graph document");
            nodes[id].kind = *kind;
            nodes[id].token = n.at("token").get<std::string>();
            if (n.contains("context")) nodes[id].context = n.at("context").get<std::string>();
        }
        std::vector<HinEdge> edges;
        for (const auto& e : j.at("edges")) {
            auto rel = parse_relation(e.at("rel").get<std::string>());
            if (!rel) throw SchemaError("unknown relation in graph document");
            edges.push_back({e.at("src").get<std::uint32_t>(), e.at("dst").get<std::uint32_t>(), *rel});
        }
        return Hin(*view, std::move(nodes), std::move(edges));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad graph document: ") + e.what());
    }
}

}  // namespace malflows
