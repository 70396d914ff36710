#include "malflows/corpus.hpp"

#include "malflows/error.hpp"
#include "malflows/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace malflows {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kComponentKindNames{"activity", "service", "receiver",
                                                                 "provider"};
constexpr std::array<std::string_view, kEntityKinds> kEntityKindNames{"App", "Condition", "API",
                                                                       "Action", "Component"};
constexpr std::array<std::string_view, kRelations> kRelationNames{
    "include", "trigger", "use", "flow", "set", "declare", "initiate"};

void check_fields(const json& obj, std::initializer_list<std::string_view> allowed,
                  const ParseOptions& opts, std::string_view where) {
    if (!opts.strict) return;
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError("unknown field '" + key + "' in " + std::string(where));
        }
    }
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw SchemaError("missing required field '" + std::string(key) + "' in " +
                          std::string(where));
    }
    if (!it->is_string()) {
        throw SchemaError("field '" + std::string(key) + "' in " + std::string(where) +
                          " must be a string");
    }
    std::string value = trim(it->get<std::string>());
    if (value.empty()) {
        throw SchemaError("field '" + std::string(key) + "' in " + std::string(where) +
                          " must be nonempty");
    }
    return value;
}

const json* optional_array(const json& obj, const char* key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    if (!it->is_array()) {
        throw SchemaError("field '" + std::string(key) + "' in " + std::string(where) +
                          " must be an array");
    }
    return &*it;
}

std::vector<std::string> string_list(const json* arr, std::string_view where) {
    std::vector<std::string> out;
    if (arr == nullptr) return out;
    std::unordered_set<std::string> seen;
    for (const auto& v : *arr) {
        if (!v.is_string()) throw SchemaError("non-string entry in " + std::string(where));
        std::string s = trim(v.get<std::string>());
        if (s.empty()) throw SchemaError("empty string entry in " + std::string(where));
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

AppFlowRecord record_from_json(const json& j, const ParseOptions& opts) {
    if (!j.is_object()) throw SchemaError("record must be a JSON object");
    check_fields(j,
                 {"app_id", "label", "period", "conditions", "dataflows", "icc", "extra_actions"},
                 opts, "record");

    AppFlowRecord rec;
    rec.app_id = require_string(j, "app_id", "record");
    const std::string where = "record '" + rec.app_id + "'";

    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
            throw SchemaError("label in " + where + " must be 0 or 1");
        }
        rec.label = it->get<int>();
    }
    if (auto it = j.find("period"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw SchemaError("period in " + where + " must be a string");
        std::string p = trim(it->get<std::string>());
        if (!p.empty()) {
            if (!is_valid_period(p)) {
                throw SchemaError("period '" + p + "' in " + where + " is not YYYY-MM");
            }
            rec.period = std::move(p);
        }
    }

    if (const json* conds = optional_array(j, "conditions", where)) {
        for (const auto& c : *conds) {
            if (!c.is_object()) throw SchemaError("condition in " + where + " must be an object");
            check_fields(c, {"semantic", "guarded_apis"}, opts, "condition of " + where);
            Condition cond;
            cond.semantic = require_string(c, "semantic", "condition of " + where);
            cond.guarded_apis = string_list(optional_array(c, "guarded_apis", where),
                                            "guarded_apis of " + where);
            rec.conditions.push_back(std::move(cond));
        }
    }

    if (const json* flows = optional_array(j, "dataflows", where)) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& f : *flows) {
            if (!f.is_object()) throw SchemaError("dataflow in " + where + " must be an object");
            check_fields(f, {"source", "sink"}, opts, "dataflow of " + where);
            DataFlow flow{require_string(f, "source", "dataflow of " + where),
                          require_string(f, "sink", "dataflow of " + where)};
            if (seen.emplace(flow.source, flow.sink).second) rec.dataflows.push_back(std::move(flow));
        }
    }

    if (const json* comps = optional_array(j, "icc", where)) {
        for (const auto& c : *comps) {
            if (!c.is_object()) throw SchemaError("icc entry in " + where + " must be an object");
            check_fields(c, {"component", "kind", "actions"}, opts, "icc entry of " + where);
            IccComponent comp;
            comp.name = require_string(c, "component", "icc entry of " + where);
            std::string kind = require_string(c, "kind", "icc entry of " + where);
            auto parsed = parse_component_kind(kind);
            if (!parsed) {
                throw SchemaError("unknown component kind '" + kind + "' in " + where);
            }
            comp.kind = *parsed;
            comp.actions = string_list(optional_array(c, "actions", where), "actions of " + where);

            auto existing = std::find_if(rec.icc.begin(), rec.icc.end(),
                                         [&](const IccComponent& e) { return e.name == comp.name; });
            if (existing == rec.icc.end()) {
                rec.icc.push_back(std::move(comp));
                continue;
            }
            if (existing->kind != comp.kind) {
                throw SchemaError("component '" + comp.name + "' in " + where +
                                  " declared with two kinds");
            }
            for (auto& a : comp.actions) {
                if (std::find(existing->actions.begin(), existing->actions.end(), a) ==
                    existing->actions.end()) {
                    existing->actions.push_back(std::move(a));
                }
            }
        }
    }

    rec.extra_actions =
        string_list(optional_array(j, "extra_actions", where), "extra_actions of " + where);
    return rec;
}

}  // namespace

std::string_view to_string(ComponentKind kind) {
    return kComponentKindNames[static_cast<std::size_t>(kind)];
}

std::optional<ComponentKind> parse_component_kind(std::string_view s) {
    for (std::size_t i = 0; i < kComponentKindNames.size(); ++i) {
        if (kComponentKindNames[i] == s) return static_cast<ComponentKind>(i);
    }
    return std::nullopt;
}

std::string_view to_string(EntityKind kind) {
    return kEntityKindNames[static_cast<std::size_t>(kind)];
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
    for (std::size_t i = 0; i < kEntityKindNames.size(); ++i) {
        if (kEntityKindNames[i] == s) return static_cast<EntityKind>(i);
    }
    return std::nullopt;
}

std::string_view to_string(Relation r) { return kRelationNames[static_cast<std::size_t>(r)]; }

std::optional<Relation> parse_relation(std::string_view s) {
    for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
        if (kRelationNames[i] == s) return static_cast<Relation>(i);
    }
    return std::nullopt;
}

RelationSignature signature(Relation r) {
    switch (r) {
        case Relation::Include: return {EntityKind::App, EntityKind::Condition};
        case Relation::Trigger: return {EntityKind::Condition, EntityKind::Api};
        case Relation::Use: return {EntityKind::App, EntityKind::Api};
        case Relation::Flow: return {EntityKind::Api, EntityKind::Api};
        case Relation::Set: return {EntityKind::App, EntityKind::Action};
        case Relation::Declare: return {EntityKind::App, EntityKind::Component};
        case Relation::Initiate: return {EntityKind::Component, EntityKind::Action};
    }
    throw Error("bad relation");
}

bool is_valid_period(std::string_view p) {
    if (p.size() != 7 || p[4] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6}) {
        if (p[i] < '0' || p[i] > '9') return false;
    }
    int month = (p[5] - '0') * 10 + (p[6] - '0');
    return month >= 1 && month <= 12;
}

AppFlowRecord parse_record_line(std::string_view line, const ParseOptions& opts,
                                std::size_t line_no) {
    json j;
    try {
        j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        std::ostringstream msg;
        msg << "malformed record";
        if (line_no != 0) msg << " on line " << line_no;
        msg << " at offset " << e.byte << ": " << e.what();
        throw ParseError(msg.str(), line_no, e.byte);
    }
    try {
        return record_from_json(j, opts);
    } catch (const SchemaError& e) {
        if (line_no == 0) throw;
        throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

std::string record_to_json_line(const AppFlowRecord& r) {
    json j;
    j["app_id"] = r.app_id;
    if (r.label) j["label"] = *r.label;
    if (r.period) j["period"] = *r.period;
    j["conditions"] = json::array();
    for (const auto& c : r.conditions) {
        j["conditions"].push_back({{"semantic", c.semantic}, {"guarded_apis", c.guarded_apis}});
    }
    j["dataflows"] = json::array();
    for (const auto& f : r.dataflows) {
        j["dataflows"].push_back({{"source", f.source}, {"sink", f.sink}});
    }
    j["icc"] = json::array();
    for (const auto& c : r.icc) {
        j["icc"].push_back(
            {{"component", c.name}, {"kind", std::string(to_string(c.kind))}, {"actions", c.actions}});
    }
    j["extra_actions"] = r.extra_actions;
    return j.dump();
}

Corpus load_corpus(const std::filesystem::path& path, const ParseOptions& opts) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open records file " + path.string());
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        AppFlowRecord rec = parse_record_line(line, opts, line_no);
        auto [it, inserted] = first_line.emplace(rec.app_id, line_no);
        if (!inserted) throw DuplicateIdError(rec.app_id, it->second, line_no);
        corpus.push_back(std::move(rec));
    }
    if (in.bad()) throw Error("I/O error reading " + path.string());
    return corpus;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : corpus) out << record_to_json_line(r) << '\n';
}

LabelTable load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open labels file " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "app_id,label,period") {
        throw SchemaError(path.string() + ": expected header 'app_id,label,period'");
    }
    LabelTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cols.push_back(trim(cell));
        if (!line.empty() && line.back() == ',') cols.emplace_back();
        if (cols.size() == 2) cols.emplace_back();
        if (cols.size() != 3) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                                 " must have 3 columns",
                             line_no, 0);
        }
        if (cols[0].empty()) {
            throw SchemaError(path.string() + ": empty app_id on line " + std::to_string(line_no));
        }
        if (cols[1] != "0" && cols[1] != "1") {
            throw SchemaError(path.string() + ": label must be 0 or 1 on line " +
                              std::to_string(line_no));
        }
        LabelEntry e;
        e.label = cols[1] == "1" ? 1 : 0;
        if (!cols[2].empty()) {
            if (!is_valid_period(cols[2])) {
                throw SchemaError(path.string() + ": bad period '" + cols[2] + "' on line " +
                                  std::to_string(line_no));
            }
            e.period = cols[2];
        }
        if (!table.emplace(cols[0], e).second) {
            throw SchemaError(path.string() + ": duplicate app_id '" + cols[0] + "'");
        }
    }
    return table;
}

void save_labels(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "app_id,label,period\n";
    for (const auto& r : corpus) {
        if (!r.label) continue;
        out << r.app_id << ',' << *r.label << ',' << r.period.value_or("") << '\n';
    }
}

void apply_labels(Corpus& corpus, const LabelTable& labels) {
    for (auto& r : corpus) {
        auto it = labels.find(r.app_id);
        if (it == labels.end()) continue;
        if (r.label && *r.label != it->second.label) {
            throw SchemaError("label for '" + r.app_id + "' disagrees with labels file");
        }
        r.label = it->second.label;
        if (it->second.period) r.period = it->second.period;
    }
}

std::uint32_t Interner::intern(const std::string& token) {
    auto [it, inserted] = ids_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
}

std::optional<std::uint32_t> Interner::find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

bool RelationSet::contains(Relation r, std::uint32_t a, std::uint32_t b) const {
    const auto& list = (*this)[r];
    return std::binary_search(list.begin(), list.end(), std::make_pair(a, b));
}

const std::vector<ContextTriple>* RelationSet::ledger(Relation r) const {
    switch (r) {
        case Relation::Trigger: return &trigger_ledger;
        case Relation::Flow: return &flow_ledger;
        case Relation::Initiate: return &initiate_ledger;
        default: return nullptr;
    }
}

CorpusIndex build_relations(const Corpus& corpus) {
    // Sorted token sets first so that ids are independent of record order.
    std::array<std::set<std::string>, kEntityKinds> tokens;
    auto& apps = tokens[static_cast<std::size_t>(EntityKind::App)];
    auto& conds = tokens[static_cast<std::size_t>(EntityKind::Condition)];
    auto& apis = tokens[static_cast<std::size_t>(EntityKind::Api)];
    auto& actions = tokens[static_cast<std::size_t>(EntityKind::Action)];
    auto& comps = tokens[static_cast<std::size_t>(EntityKind::Component)];
    for (const auto& r : corpus) {
        apps.insert(r.app_id);
        for (const auto& c : r.conditions) {
            conds.insert(c.semantic);
            apis.insert(c.guarded_apis.begin(), c.guarded_apis.end());
        }
        for (const auto& f : r.dataflows) {
            apis.insert(f.source);
            apis.insert(f.sink);
        }
        for (const auto& c : r.icc) {
            comps.insert(c.name);
            actions.insert(c.actions.begin(), c.actions.end());
        }
        actions.insert(r.extra_actions.begin(), r.extra_actions.end());
    }

    CorpusIndex index;
    for (std::size_t k = 0; k < kEntityKinds; ++k) {
        for (const auto& t : tokens[k]) index.entities.kinds[k].intern(t);
    }
    const auto& ent = index.entities;
    auto id = [&](EntityKind k, const std::string& t) { return *ent[k].find(t); };

    RelationSet& rel = index.relations;
    for (const auto& r : corpus) {
        const std::uint32_t app = id(EntityKind::App, r.app_id);
        for (const auto& c : r.conditions) {
            const std::uint32_t cond = id(EntityKind::Condition, c.semantic);
            rel[Relation::Include].emplace_back(app, cond);
            for (const auto& api_token : c.guarded_apis) {
                const std::uint32_t api = id(EntityKind::Api, api_token);
                rel[Relation::Trigger].emplace_back(cond, api);
                rel[Relation::Use].emplace_back(app, api);
                rel.trigger_ledger.push_back({app, cond, api});
            }
        }
        for (const auto& f : r.dataflows) {
            const std::uint32_t src = id(EntityKind::Api, f.source);
            const std::uint32_t snk = id(EntityKind::Api, f.sink);
            rel[Relation::Use].emplace_back(app, src);
            rel[Relation::Use].emplace_back(app, snk);
            rel[Relation::Flow].emplace_back(src, snk);
            rel.flow_ledger.push_back({app, src, snk});
        }
        for (const auto& c : r.icc) {
            const std::uint32_t comp = id(EntityKind::Component, c.name);
            rel[Relation::Declare].emplace_back(app, comp);
            for (const auto& a : c.actions) {
                const std::uint32_t act = id(EntityKind::Action, a);
                rel[Relation::Initiate].emplace_back(comp, act);
                rel[Relation::Set].emplace_back(app, act);
                rel.initiate_ledger.push_back({app, comp, act});
            }
        }
        for (const auto& a : r.extra_actions) {
            rel[Relation::Set].emplace_back(app, id(EntityKind::Action, a));
        }
    }

    auto canonical = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& list : rel.edges) canonical(list);
    canonical(rel.trigger_ledger);
    canonical(rel.flow_ledger);
    canonical(rel.initiate_ledger);
    return index;
}

namespace {

struct Counter {
    std::map<std::string, std::size_t> benign;
    std::map<std::string, std::size_t> malware;

    void add(const std::string& token, int label) {
        ++(label == 1 ? malware : benign)[token];
    }
};

std::vector<TokenCount> top_k(const std::map<std::string, std::size_t>& counts, std::size_t k) {
    std::vector<TokenCount> out;
    for (const auto& [t, c] : counts) out.push_back({t, c});
    std::stable_sort(out.begin(), out.end(),
                     [](const TokenCount& a, const TokenCount& b) { return a.count > b.count; });
    if (out.size() > k) out.resize(k);
    return out;
}

ClassStats summarize(const Counter& c, std::size_t k) {
    ClassStats s;
    s.benign = top_k(c.benign, k);
    s.malware = top_k(c.malware, k);
    std::map<std::string, JointCount> joint;
    for (const auto& [t, n] : c.benign) {
        joint[t].token = t;
        joint[t].benign_count = n;
    }
    for (const auto& [t, n] : c.malware) {
        joint[t].token = t;
        joint[t].malware_count = n;
    }
    for (auto& [_, jc] : joint) s.joint.push_back(jc);
    std::stable_sort(s.joint.begin(), s.joint.end(), [](const JointCount& a, const JointCount& b) {
        return a.benign_count + a.malware_count > b.benign_count + b.malware_count;
    });
    if (s.joint.size() > k) s.joint.resize(k);
    return s;
}

}  // namespace

CorpusStats corpus_stats(const Corpus& corpus, std::size_t k) {
    if (k == 0) throw Error("stats: k must be positive");
    CorpusStats stats;
    Counter conditions, guarded, sources, sinks, kinds, actions;
    for (const auto& r : corpus) {
        if (!r.label) {
            ++stats.unlabeled_apps;
            continue;
        }
        const int label = *r.label;
        ++(label == 1 ? stats.malware_apps : stats.benign_apps);
        for (const auto& c : r.conditions) {
            conditions.add(c.semantic, label);
            for (const auto& api : c.guarded_apis) guarded.add(api, label);
        }
        for (const auto& f : r.dataflows) {
            sources.add(f.source, label);
            sinks.add(f.sink, label);
        }
        for (const auto& c : r.icc) {
            kinds.add(std::string(to_string(c.kind)), label);
            for (const auto& a : c.actions) actions.add(a, label);
        }
        for (const auto& a : r.extra_actions) actions.add(a, label);
    }
    stats.classes["conditions"] = summarize(conditions, k);
    stats.classes["guarded_apis"] = summarize(guarded, k);
    stats.classes["sources"] = summarize(sources, k);
    stats.classes["sinks"] = summarize(sinks, k);
    stats.classes["component_kinds"] = summarize(kinds, k);
    stats.classes["actions"] = summarize(actions, k);
    return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
    json j;
    j["apps"] = {{"benign", stats.benign_apps},
                 {"malware", stats.malware_apps},
                 {"unlabeled", stats.unlabeled_apps}};
    for (const auto& [name, cs] : stats.classes) {
        json arr = json::array();
        for (const auto& jc : cs.joint) {
            arr.push_back({{"token", jc.token},
                           {"benign_count", jc.benign_count},
                           {"malware_count", jc.malware_count}});
        }
        j[name] = std::move(arr);
    }
    return j.dump(2);
}

}  // namespace malflows
