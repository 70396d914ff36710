#include "malflows/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace malflows;

namespace {

std::set<std::string> tokens_of(const AppFlowRecord& r) {
    std::set<std::string> out;
    for (const auto& c : r.conditions) {
        out.insert("c:" + c.semantic);
        for (const auto& a : c.guarded_apis) out.insert("g:" + a);
    }
    for (const auto& f : r.dataflows) {
        out.insert("s:" + f.source);
        out.insert("k:" + f.sink);
    }
    for (const auto& comp : r.icc) {
        out.insert("m:" + comp.name);
        for (const auto& a : comp.actions) out.insert("a:" + a);
    }
    for (const auto& a : r.extra_actions) out.insert("a:" + a);
    return out;
}

std::string dump(const Corpus& c) {
    std::string s;
    for (const auto& r : c) s += record_to_json_line(r) + "\n";
    return s;
}

}  // namespace

TEST_CASE("same spec, same bytes") {
    SynthSpec spec;
    spec.n_apps = 120;
    spec.seed = 9;
    const auto a = dump(generate_corpus(spec));
    CHECK(a == dump(generate_corpus(spec)));
    spec.seed = 10;
    CHECK(a != dump(generate_corpus(spec)));
}

TEST_CASE("generated records are canonical and within the configured ranges") {
    SynthSpec spec;
    spec.n_apps = 300;
    spec.malware_fraction = 0.3;
    spec.seed = 2;
    const auto corpus = generate_corpus(spec);
    REQUIRE(corpus.size() == 300);
    std::size_t malware = 0;
    std::set<std::string> ids, periods;
    for (const auto& r : corpus) {
        CHECK(ids.insert(r.app_id).second);
        REQUIRE(r.label);
        REQUIRE(r.period);
        CHECK(is_valid_period(*r.period));
        periods.insert(*r.period);
        malware += *r.label;
        CHECK(r.conditions.size() <= 4);
        CHECK(r.dataflows.size() <= 5);
        CHECK(r.icc.size() <= 3);
        CHECK(r.extra_actions.size() <= 2);
        CHECK_FALSE(tokens_of(r).empty());
        // Parsing the serialized line strictly gives the same record back.
        const auto line = record_to_json_line(r);
        CHECK(record_to_json_line(parse_record_line(line, {true})) == line);
    }
    CHECK(malware == 90);
    CHECK(periods.size() == 6);
    CHECK(*periods.begin() == "2018-01");
    CHECK(*periods.rbegin() == "2018-06");
}

TEST_CASE("full separation gives disjoint vocabularies") {
    SynthSpec spec;
    spec.n_apps = 200;
    spec.sep = 1.0;
    spec.seed = 4;
    const auto corpus = generate_corpus(spec);
    std::set<std::string> seen[2];
    for (const auto& r : corpus) {
        const auto t = tokens_of(r);
        seen[*r.label].insert(t.begin(), t.end());
    }
    for (const auto& t : seen[0]) CHECK(seen[1].count(t) == 0);

    // A bag-of-tokens rule learned on half the apps is perfect on the rest.
    std::set<std::string> malware_tokens;
    for (std::size_t i = 0; i < corpus.size() / 2; ++i)
        if (*corpus[i].label == 1) {
            const auto t = tokens_of(corpus[i]);
            malware_tokens.insert(t.begin(), t.end());
        }
    std::size_t wrong = 0;
    for (std::size_t i = corpus.size() / 2; i < corpus.size(); ++i) {
        bool hit = false;
        for (const auto& t : tokens_of(corpus[i])) hit = hit || malware_tokens.count(t);
        wrong += hit != (*corpus[i].label == 1);
    }
    CHECK(wrong == 0);
}

TEST_CASE("top condition differs by class once separation is moderate") {
    for (double sep : {0.5, 0.8, 1.0}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            SynthSpec spec;
            spec.n_apps = 200;
            spec.sep = sep;
            spec.seed = seed;
            const auto stats = corpus_stats(generate_corpus(spec), 1);
            const auto& cond = stats.classes.at("conditions");
            REQUIRE(cond.benign.size() == 1);
            REQUIRE(cond.malware.size() == 1);
            CHECK(cond.benign[0].token != cond.malware[0].token);
        }
    }
}

TEST_CASE("no separation draws both classes from the same pools") {
    SynthSpec spec;
    spec.n_apps = 400;
    spec.sep = 0.0;
    const auto corpus = generate_corpus(spec);
    std::set<std::string> seen[2];
    for (const auto& r : corpus) {
        const auto t = tokens_of(r);
        seen[*r.label].insert(t.begin(), t.end());
    }
    CHECK(seen[0] == seen[1]);
}

TEST_CASE("bad specs are rejected") {
    SynthSpec spec;
    spec.n_apps = 0;
    CHECK_THROWS(generate_corpus(spec));
    spec = {};
    spec.sep = 1.5;
    CHECK_THROWS(validate_synth_spec(spec));
    spec = {};
    spec.malware_fraction = -0.1;
    CHECK_THROWS(validate_synth_spec(spec));
    spec = {};
    spec.first_period = "2018-13";
    CHECK_THROWS(validate_synth_spec(spec));
    spec = {};
    spec.conditions_per_app = {3, 1};
    CHECK_THROWS(validate_synth_spec(spec));
    spec = {};
    spec.periods = 0;
    CHECK_THROWS(validate_synth_spec(spec));
}
