#include "malflows/corpus.hpp"
#include "malflows/error.hpp"
#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"
#include "random_corpus.hpp"

#include <doctest.h>
#include <json.hpp>

#include <map>

using namespace malflows;
namespace mt = malflows::testing;

namespace {

Corpus two_apps() { return load_corpus(std::string(MALFLOWS_TEST_DATA) + "/two_apps.jsonl"); }

Hin refined(const Corpus& c, View v) {
    const auto ix = build_relations(c);
    return refine_hin(build_view_hin(ix, v), refinement_config(v), ix);
}

using TokenEdge = std::tuple<Relation, HinNode, HinNode>;

std::set<TokenEdge> token_edges(const Hin& h) {
    std::set<TokenEdge> out;
    for (const auto& e : h.edges()) out.emplace(e.rel, h.node(e.src), h.node(e.dst));
    return out;
}

std::multiset<std::pair<EntityKind, std::string>> tokens_of(const Hin& h, EntityKind skip) {
    std::multiset<std::pair<EntityKind, std::string>> out;
    for (const auto& n : h.nodes())
        if (n.kind != skip) out.emplace(n.kind, n.token);
    return out;
}

}  // namespace

TEST_CASE("single app CF graph") {
    Corpus c{parse_record_line(R"({"app_id":"a","conditions":[{"semantic":"NETWORK_INFORMATION","guarded_apis":["x"]}]})")};
    const Hin h = build_view_hin(build_relations(c), View::CF);
    CHECK(h.size() == 3);
    CHECK(h.edges().size() == 2);
    CHECK(validate_schema(h).empty());
}

TEST_CASE("empty corpus gives empty graphs") {
    const auto ix = build_relations({});
    for (View v : kViews) {
        CHECK(build_view_hin(ix, v).empty());
        CHECK(refine_hin(build_view_hin(ix, v), refinement_config(v), ix).empty());
        CHECK(oracle_refined_hin({}, v).empty());
    }
}

TEST_CASE("views hold only their own relations") {
    Rng rng(2);
    const auto corpus = mt::random_corpus(rng, {12, 6, 0.0});
    const auto ix = build_relations(corpus);
    for (View v : kViews) {
        const Hin h = build_view_hin(ix, v);
        const auto rels = view_relations(v);
        for (const auto& e : h.edges()) CHECK(std::find(rels.begin(), rels.end(), e.rel) != rels.end());
        CHECK(validate_schema(h).empty());
    }
}

TEST_CASE("two-app data-flow scenario") {
    const Corpus corpus = two_apps();
    const auto ix = build_relations(corpus);
    const Hin before = build_view_hin(ix, View::DF);
    const auto a1 = *before.find(EntityKind::App, "A1");
    const auto src = *before.find(EntityKind::Api, "URL.openConnection");
    const auto log = *before.find(EntityKind::Api, "Log.i");
    CHECK(before.has_edge(a1, src, Relation::Use));
    CHECK(before.has_edge(src, log, Relation::Flow));

    const Hin after = refine_hin(before, refinement_config(View::DF), ix);
    std::vector<HinNode> clones;
    for (const auto& n : after.nodes())
        if (n.token == "URL.openConnection") clones.push_back(n);
    REQUIRE(clones.size() == 2);
    CHECK(clones[0].context == std::optional<std::string>("A1"));
    CHECK(clones[1].context == std::optional<std::string>("A2"));

    const auto c1 = *after.find(EntityKind::Api, "URL.openConnection", std::string("A1"));
    const auto c2 = *after.find(EntityKind::Api, "URL.openConnection", std::string("A2"));
    const auto log2 = *after.find(EntityKind::Api, "Log.i");
    const auto fos = *after.find(EntityKind::Api, "FileOutputStream.write");
    CHECK_FALSE(after.has_edge(c1, log2, Relation::Flow));
    CHECK(after.has_edge(c1, fos, Relation::Flow));
    CHECK(after.has_edge(c2, log2, Relation::Flow));
    CHECK_FALSE(after.find(EntityKind::Api, "URL.openConnection").has_value());
    CHECK(validate_schema(after).empty());
    CHECK(after == oracle_refined_hin(corpus, View::DF));
}

TEST_CASE("single-app refinement replaces each anchor with one clone") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto corpus = mt::random_corpus(rng, {1, 6, 0.0});
        const auto ix = build_relations(corpus);
        for (View v : kViews) {
            const Hin h = build_view_hin(ix, v);
            const Hin r = refine_hin(h, refinement_config(v), ix);
            CHECK(r.size() == h.size());
            CHECK(r.edges().size() == h.edges().size());
            // Dropping the contexts gives back the input graph.
            std::set<std::tuple<Relation, std::string, std::string>> a, b;
            for (const auto& e : h.edges()) a.emplace(e.rel, h.node(e.src).token, h.node(e.dst).token);
            for (const auto& e : r.edges()) b.emplace(e.rel, r.node(e.src).token, r.node(e.dst).token);
            CHECK(a == b);
        }
    }
}

TEST_CASE("oracle keys instances by app") {
    SUBCASE("one triple") {
        Corpus c{parse_record_line(
            R"({"app_id":"a1","conditions":[{"semantic":"NETWORK_INFORMATION","guarded_apis":["x"]}]})")};
        const Hin h = oracle_refined_hin(c, View::CF);
        REQUIRE(h.size() == 3);
        const auto a1 = *h.find(EntityKind::App, "a1");
        const auto inst = *h.find(EntityKind::Condition, "NETWORK_INFORMATION", std::string("a1"));
        const auto x = *h.find(EntityKind::Api, "x");
        CHECK(h.has_edge(a1, inst, Relation::Include));
        CHECK(h.has_edge(inst, x, Relation::Trigger));
    }
    SUBCASE("shared semantic, different APIs") {
        Corpus c{parse_record_line(R"({"app_id":"a","conditions":[{"semantic":"c","guarded_apis":["x"]}]})"),
                 parse_record_line(R"({"app_id":"b","conditions":[{"semantic":"c","guarded_apis":["y"]}]})")};
        const Hin h = oracle_refined_hin(c, View::CF);
        const auto ca = *h.find(EntityKind::Condition, "c", std::string("a"));
        const auto cb = *h.find(EntityKind::Condition, "c", std::string("b"));
        const auto x = *h.find(EntityKind::Api, "x");
        const auto y = *h.find(EntityKind::Api, "y");
        CHECK(h.has_edge(ca, x, Relation::Trigger));
        CHECK(h.has_edge(cb, y, Relation::Trigger));
        CHECK_FALSE(h.has_edge(ca, y, Relation::Trigger));
        CHECK_FALSE(h.has_edge(cb, x, Relation::Trigger));
    }
}

TEST_CASE("refinement matches the oracle on collision-free corpora") {
    Rng rng(23);
    int checked = 0;
    while (checked < 40) {
        const auto corpus = mt::random_corpus(rng, {20, 8, 0.9});
        if (!mt::collision_free(corpus)) continue;
        ++checked;
        for (View v : kViews) CHECK(refined(corpus, v) == oracle_refined_hin(corpus, v));
    }
}

TEST_CASE("refinement over-approximates the oracle on arbitrary corpora") {
    Rng rng(29);
    int strict = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto corpus = mt::random_corpus(rng);
        for (View v : kViews) {
            const Hin r = refined(corpus, v);
            const Hin o = oracle_refined_hin(corpus, v);
            CHECK(r.nodes() == o.nodes());
            const auto re = token_edges(r);
            const auto oe = token_edges(o);
            CHECK(std::includes(re.begin(), re.end(), oe.begin(), oe.end()));
            if (re.size() > oe.size()) ++strict;
        }
        CHECK(mt::collision_free(corpus) == (refined(corpus, View::CF) == oracle_refined_hin(corpus, View::CF) &&
                                             refined(corpus, View::DF) == oracle_refined_hin(corpus, View::DF) &&
                                             refined(corpus, View::ICC) == oracle_refined_hin(corpus, View::ICC)));
    }
    // The generator does produce collisions, so the inclusion is exercised.
    CHECK(strict > 0);
}

TEST_CASE("refinement properties") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto corpus = mt::random_corpus(rng);
        const auto ix = build_relations(corpus);
        for (View v : kViews) {
            const auto cfg = refinement_config(v);
            const Hin h = build_view_hin(ix, v);
            const Hin r = refine_hin(h, cfg, ix);
            CHECK(validate_schema(r).empty());

            // Non-anchor kinds and the app set are untouched.
            CHECK(tokens_of(h, cfg.anchor_kind) == tokens_of(r, cfg.anchor_kind));
            CHECK(h.nodes_of_kind(EntityKind::App).size() == r.nodes_of_kind(EntityKind::App).size());

            // Every action edge leaves a clone whose app is constraint-linked to the target.
            std::map<std::string, std::size_t> clone_out, orig_out, preds;
            for (const auto& e : r.edges()) {
                if (e.rel != cfg.action_relation) continue;
                const auto& s = r.node(e.src);
                REQUIRE(s.context.has_value());
                const auto app = *ix.entities[EntityKind::App].find(*s.context);
                const auto target = *ix.entities[signature(cfg.constraint_relation).dst].find(r.node(e.dst).token);
                CHECK(ix.relations.contains(cfg.constraint_relation, app, target));
                clone_out[s.token] += 1;
            }
            for (const auto& e : h.edges()) {
                if (e.rel == cfg.action_relation) orig_out[h.node(e.src).token] += 1;
                if (e.rel == cfg.content_relation && h.node(e.dst).kind == cfg.anchor_kind) preds[h.node(e.dst).token] += 1;
            }
            for (const auto& [tok, n] : clone_out) CHECK(n <= orig_out[tok] * preds[tok]);

            // Each anchor-kind node with action edges now has exactly one app predecessor.
            for (std::uint32_t id = 0; id < r.size(); ++id) {
                if (r.node(id).kind != cfg.anchor_kind) continue;
                if (r.neighbors(id, cfg.action_relation, Direction::Forward).empty()) continue;
                CHECK(r.neighbors(id, cfg.content_relation, Direction::Inverse).size() == 1);
            }
        }
    }
}

TEST_CASE("refinement rejects a config for another view") {
    const auto ix = build_relations(two_apps());
    CHECK_THROWS_AS(refine_hin(build_view_hin(ix, View::DF), refinement_config(View::CF), ix), Error);
}

TEST_CASE("refinement configs follow the action meta-paths") {
    auto cf = refinement_config(View::CF);
    CHECK(cf.anchor_kind == EntityKind::Condition);
    CHECK(cf.constraint_relation == Relation::Use);
    auto df = refinement_config(View::DF);
    CHECK(df.anchor_kind == EntityKind::Api);
    CHECK(df.action_relation == Relation::Flow);
    CHECK(df.constraint_relation == Relation::Use);
    auto icc = refinement_config(View::ICC);
    CHECK(icc.anchor_kind == EntityKind::Component);
    CHECK(icc.action_relation == Relation::Initiate);
    CHECK(icc.constraint_relation == Relation::Set);
}

TEST_CASE("validate_schema reports violations") {
    std::vector<HinNode> nodes{{EntityKind::App, "a", {}}, {EntityKind::Api, "x", {}}};
    SUBCASE("well formed") {
        Hin h(View::DF, nodes, {{0, 1, Relation::Use}});
        CHECK(validate_schema(h).empty());
    }
    SUBCASE("trigger from an App") {
        Hin h(View::CF, nodes, {{0, 1, Relation::Trigger}});
        const auto v = validate_schema(h);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("trigger") != std::string::npos);
    }
    SUBCASE("clone shared by two apps") {
        Hin h(View::CF,
              {{EntityKind::App, "a", {}}, {EntityKind::App, "b", {}}, {EntityKind::Condition, "c", std::string("a")}},
              {{0, 2, Relation::Include}, {1, 2, Relation::Include}});
        CHECK(validate_schema(h).size() == 1);
    }
}

TEST_CASE("duplicate nodes are rejected") {
    CHECK_THROWS_AS(Hin(View::CF, {{EntityKind::App, "a", {}}, {EntityKind::App, "a", {}}}, {}), Error);
}

TEST_CASE("graph json round trip is byte stable") {
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        const auto corpus = mt::random_corpus(rng);
        for (View v : kViews) {
            const Hin r = refined(corpus, v);
            const auto text = hin_to_json(r);
            const Hin back = hin_from_json(text);
            CHECK(back == r);
            CHECK(hin_to_json(back) == text);
        }
    }
    CHECK_THROWS_AS(hin_from_json("{not json"), ParseError);
}

TEST_CASE("graph json sorts nodes and edges") {
    const Hin r = refined(two_apps(), View::DF);
    const auto j = nlohmann::json::parse(hin_to_json(r));
    std::vector<std::tuple<std::string, std::string, std::string>> keys;
    for (const auto& n : j["nodes"]) keys.emplace_back(n["kind"], n["token"], n.value("context", ""));
    // Node kinds are ordered by the schema enum, so compare within a kind.
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (std::get<0>(keys[i]) == std::get<0>(keys[i - 1])) CHECK(keys[i - 1] < keys[i]);
    }
    CHECK(j["edges"].size() == r.edges().size());
}
