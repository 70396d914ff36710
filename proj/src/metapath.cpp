#include "malflows/metapath.hpp"

#include "malflows/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace malflows {

namespace {

constexpr auto App = EntityKind::App;
constexpr auto Cond = EntityKind::Condition;
constexpr auto Api = EntityKind::Api;
constexpr auto Act = EntityKind::Action;
constexpr auto Comp = EntityKind::Component;
constexpr auto Fwd = Direction::Forward;
constexpr auto Inv = Direction::Inverse;

MetaPath make(std::string name, std::vector<EntityKind> kinds, std::vector<MetaPathStep> steps,
              Orientation o) {
    return MetaPath{std::move(name), std::move(kinds), std::move(steps), o};
}

const std::vector<MetaPathGroup>& groups() {
    static const std::vector<MetaPathGroup> g = [] {
        const auto C = Orientation::Content;
        const auto A = Orientation::Action;
        MetaPath mp1 = make("MP1", {App, Cond, App}, {{Relation::Include, Fwd}, {Relation::Include, Inv}}, C);
        MetaPath mp2 = make("MP2", {App, Cond, Api, Cond, App},
                            {{Relation::Include, Fwd}, {Relation::Trigger, Fwd},
                             {Relation::Trigger, Inv}, {Relation::Include, Inv}},
                            A);
        MetaPath mp3 = make("MP3", {App, Api, App}, {{Relation::Use, Fwd}, {Relation::Use, Inv}}, C);
        MetaPath mp4 = make("MP4", {App, Api, Api, App},
                            {{Relation::Use, Fwd}, {Relation::Flow, Fwd}, {Relation::Use, Inv}}, A);
        MetaPath mp5 = make("MP5", {App, Act, App}, {{Relation::Set, Fwd}, {Relation::Set, Inv}}, C);
        MetaPath mp6 = make("MP6", {App, Comp, Act, Comp, App},
                            {{Relation::Declare, Fwd}, {Relation::Initiate, Fwd},
                             {Relation::Initiate, Inv}, {Relation::Declare, Inv}},
                            A);
        return std::vector<MetaPathGroup>{
            {"MPG1", View::CF, {mp1, mp2}},
            {"MPG2", View::DF, {mp3, mp4}},
            {"MPG3", View::ICC, {mp5, mp6}},
        };
    }();
    return g;
}

}  // namespace

EntityKind step_target(const MetaPathStep& step) {
    const auto sig = signature(step.rel);
    return step.dir == Direction::Forward ? sig.dst : sig.src;
}

EntityKind step_source(const MetaPathStep& step) {
    const auto sig = signature(step.rel);
    return step.dir == Direction::Forward ? sig.src : sig.dst;
}

bool MetaPath::is_symmetric() const {
    const std::size_t m = steps.size();
    for (std::size_t i = 0; i < m; ++i) {
        const auto& a = steps[i];
        const auto& b = steps[m - 1 - i];
        if (a.rel != b.rel || a.dir == b.dir) return false;
    }
    return true;
}

const MetaPath* MetaPathGroup::content() const {
    for (const auto& p : paths)
        if (p.orientation == Orientation::Content) return &p;
    return nullptr;
}

const MetaPath* MetaPathGroup::action() const {
    for (const auto& p : paths)
        if (p.orientation == Orientation::Action) return &p;
    return nullptr;
}

std::vector<MetaPathGroup> builtin_groups() { return groups(); }

const MetaPath& builtin_metapath(std::string_view name) {
    for (const auto& g : groups())
        for (const auto& p : g.paths)
            if (p.name == name) return p;
    throw Error("unknown meta-path '" + std::string(name) + "'");
}

MetaPathGroup resolve_group(std::string_view name) {
    for (const auto& g : groups()) {
        if (g.name == name) return g;
        for (const auto& p : g.paths) {
            if (p.name == name) return MetaPathGroup{p.name, g.view, {p}};
        }
    }
    throw Error("unknown meta-path group '" + std::string(name) + "'");
}

std::vector<std::string> validate_metapath(const MetaPath& mp) {
    std::vector<std::string> v;
    const std::string who = mp.name.empty() ? "meta-path" : mp.name;
    if (mp.kinds.size() < 2) {
        v.push_back(who + ": needs at least two node kinds");
        return v;
    }
    if (mp.steps.size() + 1 != mp.kinds.size()) {
        v.push_back(who + ": has " + std::to_string(mp.steps.size()) + " relations for " +
                    std::to_string(mp.kinds.size()) + " node kinds");
        return v;
    }
    if (mp.kinds.front() != EntityKind::App) v.push_back(who + ": must start at App");
    if (mp.kinds.back() != EntityKind::App) v.push_back(who + ": must end at App");
    for (std::size_t i = 0; i < mp.steps.size(); ++i) {
        const auto& s = mp.steps[i];
        if (step_source(s) != mp.kinds[i] || step_target(s) != mp.kinds[i + 1]) {
            v.push_back(who + ": step " + std::to_string(i) + " " + std::string(to_string(mp.kinds[i])) +
                        " -" + std::string(to_string(s.rel)) + (s.dir == Direction::Inverse ? "^-1" : "") +
                        "-> " + std::string(to_string(mp.kinds[i + 1])) + " does not match the schema");
        }
    }
    return v;
}

std::vector<std::string> validate_group(const MetaPathGroup& g) {
    std::vector<std::string> v;
    if (g.paths.empty()) v.push_back(g.name + ": group has no meta-paths");
    for (const auto& p : g.paths) {
        auto pv = validate_metapath(p);
        v.insert(v.end(), pv.begin(), pv.end());
        for (std::size_t i = 0; i < p.steps.size(); ++i) {
            if (std::find(view_relations(g.view).begin(), view_relations(g.view).end(), p.steps[i].rel) ==
                view_relations(g.view).end()) {
                v.push_back(g.name + ": " + p.name + " uses relation " + std::string(to_string(p.steps[i].rel)) +
                            " outside the " + std::string(to_string(g.view)) + " view");
            }
        }
    }
    return v;
}

std::string metapath_to_string(const MetaPath& mp) {
    std::string s = mp.name + ": " + std::string(to_string(mp.kinds.front()));
    for (std::size_t i = 0; i < mp.steps.size() && i + 1 < mp.kinds.size(); ++i) {
        s += " -" + std::string(to_string(mp.steps[i].rel));
        if (mp.steps[i].dir == Direction::Inverse) s += "^-1";
        s += "-> " + std::string(to_string(mp.kinds[i + 1]));
    }
    return s;
}

InstanceList enumerate_instances(const Hin& h, const MetaPath& mp, std::size_t cap) {
    InstanceList out;
    if (mp.kinds.empty() || mp.steps.size() + 1 != mp.kinds.size()) return out;
    std::vector<std::uint32_t> path;

    // Returns false once the cap is hit.
    auto extend = [&](auto&& self, std::size_t pos) -> bool {
        if (pos == mp.steps.size()) {
            if (out.paths.size() == cap) {
                out.truncated = true;
                return false;
            }
            out.paths.push_back(path);
            return true;
        }
        const auto& step = mp.steps[pos];
        for (std::uint32_t next : h.neighbors(path.back(), step.rel, step.dir)) {
            if (h.node(next).kind != mp.kinds[pos + 1]) continue;
            path.push_back(next);
            const bool more = self(self, pos + 1);
            path.pop_back();
            if (!more) return false;
        }
        return true;
    };

    for (std::uint32_t start = 0; start < h.size(); ++start) {
        if (h.node(start).kind != mp.kinds.front()) continue;
        path.assign(1, start);
        if (!extend(extend, 0)) break;
    }
    return out;
}

std::vector<MetaPathGroup> groups_from_json(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed meta-path config: ") + e.what(), 0, e.byte);
    }
    if (!j.is_array()) throw SchemaError("meta-path config must be a list");
    std::map<std::string, MetaPathGroup> by_name;
    std::vector<std::string> order;
    try {
        for (const auto& e : j) {
            MetaPath mp;
            mp.name = e.at("name").get<std::string>();
            for (const auto& k : e.at("kinds")) {
                auto kind = parse_entity_kind(k.get<std::string>());
                if (!kind) throw SchemaError(mp.name + ": unknown kind " + k.dump());
                mp.kinds.push_back(*kind);
            }
            for (const auto& r : e.at("relations")) {
                auto rel = parse_relation(r.at("rel").get<std::string>());
                if (!rel) throw SchemaError(mp.name + ": unknown relation " + r.dump());
                const auto dir = r.value("dir", std::string("fwd"));
                if (dir != "fwd" && dir != "inv") throw SchemaError(mp.name + ": dir must be fwd or inv");
                mp.steps.push_back({*rel, dir == "inv" ? Direction::Inverse : Direction::Forward});
            }
            const auto orient = e.at("orientation").get<std::string>();
            if (orient != "content" && orient != "action") {
                throw SchemaError(mp.name + ": orientation must be content or action");
            }
            mp.orientation = orient == "content" ? Orientation::Content : Orientation::Action;
            const auto group = e.at("group").get<std::string>();
            auto violations = validate_metapath(mp);
            if (!violations.empty()) throw SchemaError(violations.front());

            View view = View::CF;
            bool found = false;
            for (View v : kViews) {
                const auto rels = view_relations(v);
                if (std::all_of(mp.steps.begin(), mp.steps.end(), [&](const MetaPathStep& s) {
                        return std::find(rels.begin(), rels.end(), s.rel) != rels.end();
                    })) {
                    view = v;
                    found = true;
                }
            }
            if (!found) throw SchemaError(mp.name + ": relations span more than one view");

            auto [it, inserted] = by_name.try_emplace(group, MetaPathGroup{group, view, {}});
            if (inserted) order.push_back(group);
            if (it->second.view != view) throw SchemaError(group + ": meta-paths from different views");
            it->second.paths.push_back(std::move(mp));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad meta-path config: ") + e.what());
    }
    std::vector<MetaPathGroup> out;
    for (const auto& name : order) out.push_back(std::move(by_name[name]));
    return out;
}

}  // namespace malflows
