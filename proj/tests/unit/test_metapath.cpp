#include "malflows/corpus.hpp"
#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"
#include "random_corpus.hpp"

#include <doctest.h>

using namespace malflows;
namespace mt = malflows::testing;

namespace {

Corpus two_apps() { return load_corpus(std::string(MALFLOWS_TEST_DATA) + "/two_apps.jsonl"); }

bool instance_matches(const Hin& h, const MetaPath& mp, const std::vector<std::uint32_t>& path) {
    if (path.size() != mp.kinds.size()) return false;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (h.node(path[i]).kind != mp.kinds[i]) return false;
    }
    for (std::size_t i = 0; i < mp.steps.size(); ++i) {
        const auto& s = mp.steps[i];
        const bool ok = s.dir == Direction::Forward ? h.has_edge(path[i], path[i + 1], s.rel)
                                                    : h.has_edge(path[i + 1], path[i], s.rel);
        if (!ok) return false;
    }
    return true;
}

bool mentions(const Hin& h, const std::vector<std::uint32_t>& path, const std::string& token) {
    return std::any_of(path.begin(), path.end(), [&](std::uint32_t v) { return h.node(v).token == token; });
}

}  // namespace

TEST_CASE("builtin groups") {
    const auto groups = builtin_groups();
    REQUIRE(groups.size() == 3);
    const auto* mp2 = groups[0].action();
    REQUIRE(mp2 != nullptr);
    CHECK(mp2->name == "MP2");
    CHECK(mp2->kinds == std::vector<EntityKind>{EntityKind::App, EntityKind::Condition, EntityKind::Api,
                                                EntityKind::Condition, EntityKind::App});
    CHECK(groups[0].content()->name == "MP1");
    CHECK(groups[1].view == View::DF);
    CHECK(groups[1].action()->steps == std::vector<MetaPathStep>{{Relation::Use, Direction::Forward},
                                                                 {Relation::Flow, Direction::Forward},
                                                                 {Relation::Use, Direction::Inverse}});
    CHECK(groups[2].action()->kinds == std::vector<EntityKind>{EntityKind::App, EntityKind::Component, EntityKind::Action,
                                                        EntityKind::Component, EntityKind::App});
    for (const auto& g : groups) {
        CHECK(validate_group(g).empty());
        for (const auto& mp : g.paths) CHECK(validate_metapath(mp).empty());
    }
}

TEST_CASE("validate_metapath catches bad paths") {
    MetaPath bad_sig{"bad", {EntityKind::App, EntityKind::Api}, {{Relation::Include, Direction::Forward}}, {}};
    CHECK_FALSE(validate_metapath(bad_sig).empty());
    MetaPath bad_end{"end", {EntityKind::App, EntityKind::Condition}, {{Relation::Include, Direction::Forward}}, {}};
    CHECK_FALSE(validate_metapath(bad_end).empty());
    MetaPath bad_arity{"arity", {EntityKind::App, EntityKind::Condition, EntityKind::App},
                       {{Relation::Include, Direction::Forward}}, {}};
    CHECK_FALSE(validate_metapath(bad_arity).empty());
    CHECK(validate_metapath(builtin_metapath("MP1")).empty());
}

TEST_CASE("resolve_group") {
    CHECK(resolve_group("MPG2").paths.size() == 2);
    const auto single = resolve_group("MP4");
    REQUIRE(single.paths.size() == 1);
    CHECK(single.view == View::DF);
    CHECK_THROWS(resolve_group("MPG9"));
    CHECK_THROWS(builtin_metapath("MP7"));
}

TEST_CASE("group relations stay inside the view") {
    MetaPathGroup g = resolve_group("MPG1");
    g.paths.push_back(builtin_metapath("MP3"));
    CHECK_FALSE(validate_group(g).empty());
}

TEST_CASE("two-app instances before and after refinement") {
    const auto corpus = two_apps();
    const auto ix = build_relations(corpus);
    const Hin before = build_view_hin(ix, View::DF);
    const auto& mp4 = builtin_metapath("MP4");
    const auto pre = enumerate_instances(before, mp4, 1000);
    bool wrong_path = false;
    for (const auto& p : pre.paths) {
        CHECK(instance_matches(before, mp4, p));
        if (before.node(p[0]).token == "A1" && before.node(p[1]).token == "URL.openConnection" &&
            before.node(p[2]).token == "Log.i")
            wrong_path = true;
    }
    CHECK(wrong_path);

    const Hin after = refine_hin(before, refinement_config(View::DF), ix);
    const auto post = enumerate_instances(after, mp4, 1000);
    CHECK_FALSE(post.paths.empty());
    for (const auto& p : post.paths) CHECK_FALSE((mentions(after, p, "A1") && mentions(after, p, "Log.i")));
}

TEST_CASE("enumerate_instances on an empty graph") { CHECK(enumerate_instances(Hin{}, builtin_metapath("MP1"), 10).paths.empty()); }

TEST_CASE("instances conform and symmetric paths close under reversal") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto corpus = mt::random_corpus(rng, {8, 5, 0.5});
        const auto ix = build_relations(corpus);
        for (const auto& g : builtin_groups()) {
            for (bool refine : {false, true}) {
                Hin h = build_view_hin(ix, g.view);
                if (refine) h = refine_hin(h, refinement_config(g), ix);
                for (const auto& mp : g.paths) {
                    const auto inst = enumerate_instances(h, mp, 100000);
                    REQUIRE_FALSE(inst.truncated);
                    std::set<std::vector<std::uint32_t>> all(inst.paths.begin(), inst.paths.end());
                    CHECK(all.size() == inst.paths.size());
                    for (const auto& p : inst.paths) {
                        CHECK(instance_matches(h, mp, p));
                        if (mp.is_symmetric()) CHECK(all.count(std::vector<std::uint32_t>(p.rbegin(), p.rend())) == 1);
                    }
                }
            }
        }
    }
}

TEST_CASE("enumeration truncates at the cap") {
    Rng rng(43);
    const auto corpus = mt::random_corpus(rng, {20, 3, 0.0});
    const Hin h = build_view_hin(build_relations(corpus), View::ICC);
    const auto full = enumerate_instances(h, builtin_metapath("MP5"), 1000000);
    REQUIRE(full.paths.size() > 3);
    const auto cut = enumerate_instances(h, builtin_metapath("MP5"), 3);
    CHECK(cut.truncated);
    CHECK(cut.paths.size() == 3);
    CHECK(std::equal(cut.paths.begin(), cut.paths.end(), full.paths.begin()));
}

TEST_CASE("meta-path config") {
    const auto groups = groups_from_json(R"([
      {"name":"MPX","kinds":["App","API","App"],
       "relations":[{"rel":"use","dir":"fwd"},{"rel":"use","dir":"inv"}],
       "orientation":"content","group":"G"}])");
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].view == View::DF);
    CHECK(groups[0].paths[0].steps == builtin_metapath("MP3").steps);
    CHECK_THROWS(groups_from_json(R"([{"name":"bad","kinds":["App","API"],"relations":[{"rel":"include","dir":"fwd"}],"orientation":"content","group":"G"}])"));
}

TEST_CASE("metapath_to_string") {
    CHECK(metapath_to_string(builtin_metapath("MP1")).find("include") != std::string::npos);
}
