#include "malflows/corpus.hpp"
#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"
#include "malflows/walk.hpp"
#include "random_corpus.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace malflows;
namespace mt = malflows::testing;

namespace {

Hin refined_view(const Corpus& c, View v) {
    const auto ix = build_relations(c);
    return refine_hin(build_view_hin(ix, v), refinement_config(v), ix);
}

double total(const std::vector<Transition>& d) {
    double s = 0.0;
    for (const auto& t : d) s += t.probability;
    return s;
}

std::map<std::string, double> by_token(const Hin& h, const std::vector<Transition>& d) {
    std::map<std::string, double> out;
    for (const auto& t : d) out[h.node(t.node).token] += t.probability;
    return out;
}

// States a walk may be in after each prefix, tracked independently of the
// sampler: every (node, path, position) consistent with the nodes so far.
struct Tracker {
    const Hin& h;
    const MetaPathGroup& g;

    bool step_ok(std::size_t k, std::size_t pos, std::uint32_t u, std::uint32_t v) const {
        const auto& mp = g.paths[k];
        if (pos >= mp.steps.size() || h.node(v).kind != mp.kinds[pos + 1]) return false;
        const auto& s = mp.steps[pos];
        return s.dir == Direction::Forward ? h.has_edge(u, v, s.rel) : h.has_edge(v, u, s.rel);
    }

    std::set<std::pair<std::size_t, std::size_t>> next(const std::set<std::pair<std::size_t, std::size_t>>& states,
                                                        std::uint32_t u, std::uint32_t v) const {
        std::set<std::pair<std::size_t, std::size_t>> out;
        for (auto [k, pos] : states) {
            for (std::size_t j = 0; j < g.paths.size(); ++j) {
                if (pos != 0 && j != k) continue;
                if (!step_ok(j, pos, u, v)) continue;
                std::size_t np = pos + 1;
                if (np == g.paths[j].steps.size() || h.node(v).kind == EntityKind::App) np = 0;
                out.emplace(np == 0 ? 0 : j, np);
            }
        }
        return out;
    }
};

}  // namespace

TEST_CASE("App node with four condition clones") {
    Corpus c{parse_record_line(R"({"app_id":"a","conditions":[
        {"semantic":"C1","guarded_apis":["x"]},{"semantic":"C2","guarded_apis":["x"]},
        {"semantic":"C3","guarded_apis":["y"]},{"semantic":"C4","guarded_apis":["z"]}]})")};
    const Hin h = refined_view(c, View::CF);
    const auto d = transition_distribution(h, resolve_group("MPG1"), {*h.find(EntityKind::App, "a"), 0, 0});
    REQUIRE(d.size() == 4);
    for (const auto& t : d) CHECK(t.probability == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("App node with one condition") {
    Corpus c{parse_record_line(R"({"app_id":"a","conditions":[{"semantic":"C","guarded_apis":["x"]}]})")};
    const Hin h = refined_view(c, View::CF);
    const auto d = transition_distribution(h, resolve_group("MPG1"), {*h.find(EntityKind::App, "a"), 0, 0});
    REQUIRE(d.size() == 1);
    CHECK(d[0].probability == 1.0);
}

TEST_CASE("condition clone mid-MP2") {
    Corpus c{parse_record_line(
                 R"({"app_id":"a","conditions":[{"semantic":"C","guarded_apis":["x","y","z"]},{"semantic":"D","guarded_apis":[]}]})"),
             parse_record_line(R"({"app_id":"b","conditions":[{"semantic":"C","guarded_apis":["x"]}]})")};
    const Hin h = refined_view(c, View::CF);
    const auto g = resolve_group("MPG1");
    const auto clone = *h.find(EntityKind::Condition, "C", std::string("a"));
    const auto d = transition_distribution(h, g, {clone, 1, 1});
    REQUIRE(d.size() == 3);
    for (const auto& t : d) CHECK(t.probability == doctest::Approx(1.0 / 3).epsilon(1e-12));
    // Mid-MP1 the only way on is back to the owning app.
    const auto back = transition_distribution(h, g, {clone, 0, 1});
    REQUIRE(back.size() == 1);
    CHECK(h.node(back[0].node).token == "a");

    // D guards nothing, so MP2 dies there.
    const auto dead = *h.find(EntityKind::Condition, "D");
    CHECK(transition_distribution(h, g, {dead, 1, 1}).empty());
}

TEST_CASE("groups mixing first steps weight each kind by its share of paths") {
    Corpus c{parse_record_line(R"({"app_id":"a","extra_actions":["X","Y","Z"],
        "icc":[{"component":"k","kind":"service","actions":["X"]}]})")};
    const Hin h = refined_view(c, View::ICC);
    const auto g = resolve_group("MPG3");
    const auto app = *h.find(EntityKind::App, "a");
    const auto d = by_token(h, transition_distribution(h, g, {app, 0, 0}));
    // set: 3 actions share 1/2, declare: 1 component gets 1/2.
    CHECK(d.at("X") == doctest::Approx(1.0 / 6));
    CHECK(d.at("Y") == doctest::Approx(1.0 / 6));
    CHECK(d.at("k") == doctest::Approx(0.5));

    Corpus only_decl{parse_record_line(R"({"app_id":"a","icc":[{"component":"k","kind":"service","actions":[]},
        {"component":"j","kind":"activity","actions":[]}]})")};
    const Hin h2 = refined_view(only_decl, View::ICC);
    const auto d2 = transition_distribution(h2, g, {*h2.find(EntityKind::App, "a"), 0, 0});
    REQUIRE(d2.size() == 2);
    CHECK(d2[0].probability == doctest::Approx(0.5));
}

TEST_CASE("sampled first steps follow the distribution") {
    Corpus c{parse_record_line(R"({"app_id":"a","extra_actions":["X","Y","Z"],
        "icc":[{"component":"k","kind":"service","actions":["X"]},{"component":"j","kind":"service","actions":["Q"]}]})")};
    const Hin h = refined_view(c, View::ICC);
    const auto g = resolve_group("MPG3");
    const auto app = *h.find(EntityKind::App, "a");
    const auto expected = transition_distribution(h, g, {app, 0, 0});
    WalkParams p;
    p.walks_per_app = 40000;
    p.walk_length = 2;
    p.seed = 99;
    const auto walks = sample_walks(h, g, p);
    std::map<std::uint32_t, double> freq;
    for (const auto& w : walks) {
        REQUIRE(w.size() == 2);
        freq[w[1]] += 1.0 / static_cast<double>(walks.size());
    }
    for (const auto& t : expected) CHECK(std::abs(freq[t.node] - t.probability) < 0.01);
}

TEST_CASE("single-app walk example") {
    Corpus c{parse_record_line(
        R"({"app_id":"a1","conditions":[{"semantic":"NETWORK_INFORMATION","guarded_apis":["x"]}]})")};
    const Hin h = refined_view(c, View::CF);
    WalkParams p;
    p.walks_per_app = 200;
    p.walk_length = 5;
    const auto walks = walks_to_tokens(h, sample_walks(h, resolve_group("MPG1"), p));
    const TokenWalk via_mp2{"a1", "NETWORK_INFORMATION", "x", "NETWORK_INFORMATION", "a1"};
    bool seen = false;
    for (const auto& w : walks) {
        CHECK(w.size() == 5);
        if (w == via_mp2) seen = true;
    }
    CHECK(seen);
}

TEST_CASE("walk_conforms examples") {
    Corpus c{parse_record_line(R"({"app_id":"a","conditions":[{"semantic":"C","guarded_apis":["x"]}]})")};
    const Hin h = refined_view(c, View::CF);
    const auto g = resolve_group("MPG1");
    const auto a = *h.find(EntityKind::App, "a");
    const auto cond = *h.find(EntityKind::Condition, "C", std::string("a"));
    const auto x = *h.find(EntityKind::Api, "x");
    CHECK(walk_conforms(std::vector<std::uint32_t>{a}, g, h).ok);
    CHECK(walk_conforms(std::vector<std::uint32_t>{a, cond, x, cond, a, cond, a}, g, h).ok);
    const auto bad = walk_conforms(std::vector<std::uint32_t>{a, cond, x, x}, g, h);
    CHECK_FALSE(bad.ok);
    CHECK(bad.first_violation == 3);
    CHECK_FALSE(walk_conforms(std::vector<std::uint32_t>{cond, a}, g, h).ok);
    // MP1 alone cannot reach the API.
    CHECK_FALSE(walk_conforms(std::vector<std::uint32_t>{a, cond, x}, resolve_group("MP1"), h).ok);
}

TEST_CASE("fuzzed walks conform and every visited distribution is normalized") {
    Rng rng(51);
    std::size_t walks_checked = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const auto corpus = mt::random_corpus(rng, {10, 6, 0.5});
        const auto ix = build_relations(corpus);
        for (const auto& g : builtin_groups()) {
            const Hin h = refine_hin(build_view_hin(ix, g.view), refinement_config(g), ix);
            WalkParams p;
            p.walks_per_app = 5;
            p.walk_length = 30;
            p.seed = static_cast<std::uint64_t>(trial);
            const auto walks = sample_walks(h, g, p);
            CHECK(walks.size() == 5 * h.nodes_of_kind(EntityKind::App).size());
            Tracker tr{h, g};
            for (const auto& w : walks) {
                ++walks_checked;
                CHECK(walk_conforms(w, g, h).ok);
                std::set<std::pair<std::size_t, std::size_t>> states{{0, 0}};
                for (std::size_t i = 0; i < w.size(); ++i) {
                    bool can_end = false;
                    for (auto [k, pos] : states) {
                        const auto d = transition_distribution(h, g, {w[i], k, pos});
                        if (d.empty()) {
                            can_end = true;
                            continue;
                        }
                        CHECK(std::abs(total(d) - 1.0) < 1e-9);
                        for (const auto& t : d) CHECK(t.probability >= 0.0);
                    }
                    // The path is drawn apart from the neighbour, so a walk may stop
                    // wherever one consistent state has nowhere to go.
                    if (i + 1 == w.size()) {
                        if (w.size() < p.walk_length) CHECK(can_end);
                        break;
                    }
                    states = tr.next(states, w[i], w[i + 1]);
                    REQUIRE_FALSE(states.empty());
                }
            }
        }
    }
    CHECK(walks_checked > 1000);
}

TEST_CASE("walks are deterministic across runs and thread counts") {
    Rng rng(53);
    const auto corpus = mt::random_corpus(rng, {20, 8, 0.5});
    const Hin h = refined_view(corpus, View::DF);
    WalkParams p;
    p.seed = 12345;
    p.threads = 1;
    const auto a = sample_walks(h, resolve_group("MPG2"), p);
    const auto b = sample_walks(h, resolve_group("MPG2"), p);
    p.threads = 8;
    const auto c = sample_walks(h, resolve_group("MPG2"), p);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(walks_to_text(walks_to_tokens(h, a)) == walks_to_text(walks_to_tokens(h, c)));
    p.seed = 54321;
    CHECK(sample_walks(h, resolve_group("MPG2"), p) != a);
}

TEST_CASE("walk parameter checks") {
    Corpus c{parse_record_line(R"({"app_id":"a","conditions":[{"semantic":"C","guarded_apis":["x"]}]})")};
    const Hin h = refined_view(c, View::CF);
    WalkParams p;
    p.walk_length = 1;
    CHECK_THROWS(sample_walks(h, resolve_group("MPG1"), p));
    p.walk_length = 5;
    p.walks_per_app = 0;
    CHECK_THROWS(sample_walks(h, resolve_group("MPG1"), p));
}

TEST_CASE("walk files round trip with escaped tokens") {
    mt::TempDir dir("walks");
    const std::vector<TokenWalk> walks{{"app 1", "tok%x", "b"}, {"lonely"}, {"c", "d"}};
    write_walks(dir / "w.txt", walks);
    const auto back = read_walks(dir / "w.txt");
    REQUIRE(back.size() == 2);
    CHECK(back[0] == walks[0]);
    CHECK(back[1] == walks[2]);
}
