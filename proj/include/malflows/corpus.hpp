#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace malflows {

enum class ComponentKind { Activity, Service, Receiver, Provider };

std::string_view to_string(ComponentKind kind);
std::optional<ComponentKind> parse_component_kind(std::string_view s);

struct Condition {
    std::string semantic;
    std::vector<std::string> guarded_apis;
};

struct DataFlow {
    std::string source;
    std::string sink;
};

struct IccComponent {
    std::string name;
    ComponentKind kind = ComponentKind::Activity;
    std::vector<std::string> actions;
};

/// One app's extracted flow features across the control-flow, data-flow and
/// ICC views. Records are canonical after parsing: every string is trimmed and
/// every list is free of duplicates (first occurrence kept).
struct AppFlowRecord {
    std::string app_id;
    std::optional<int> label;  // 1 = malware, 0 = benign
    std::optional<std::string> period;  // YYYY-MM
    std::vector<Condition> conditions;
    std::vector<DataFlow> dataflows;
    std::vector<IccComponent> icc;
    std::vector<std::string> extra_actions;
};

using Corpus = std::vector<AppFlowRecord>;

struct ParseOptions {
    bool strict = false;  // reject unknown fields
};

AppFlowRecord parse_record_line(std::string_view line, const ParseOptions& opts = {},
                                std::size_t line_no = 0);
std::string record_to_json_line(const AppFlowRecord& record);

Corpus load_corpus(const std::filesystem::path& path, const ParseOptions& opts = {});
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct LabelEntry {
    int label = 0;
    std::optional<std::string> period;
};

using LabelTable = std::map<std::string, LabelEntry>;

LabelTable load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const Corpus& corpus);

// Joins labels.csv into the corpus. An app whose inline label disagrees with
// the table is a schema error; apps missing from the table keep what they had.
void apply_labels(Corpus& corpus, const LabelTable& labels);

bool is_valid_period(std::string_view period);

enum class EntityKind : std::uint8_t { App, Condition, Api, Action, Component };
inline constexpr std::size_t kEntityKinds = 5;

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view s);

class Interner {
public:
    std::uint32_t intern(const std::string& token);
    std::optional<std::uint32_t> find(std::string_view token) const;
    const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct EntityTable {
    std::array<Interner, kEntityKinds> kinds;

    Interner& operator[](EntityKind k) { return kinds[static_cast<std::size_t>(k)]; }
    const Interner& operator[](EntityKind k) const { return kinds[static_cast<std::size_t>(k)]; }
};

enum class Relation : std::uint8_t { Include, Trigger, Use, Flow, Set, Declare, Initiate };
inline constexpr std::size_t kRelations = 7;

struct RelationSignature {
    EntityKind src;
    EntityKind dst;
};

RelationSignature signature(Relation r);
std::string_view to_string(Relation r);
std::optional<Relation> parse_relation(std::string_view s);

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct ContextTriple {
    std::uint32_t app;
    std::uint32_t from;
    std::uint32_t to;

    friend auto operator<=>(const ContextTriple&, const ContextTriple&) = default;
};

/// R1..R7 as sorted, deduplicated id pairs, plus the per-app context ledger for
/// the three action relations (trigger, flow, initiate).
struct RelationSet {
    std::array<EdgeList, kRelations> edges;
    std::vector<ContextTriple> trigger_ledger;   // (app, condition, api)
    std::vector<ContextTriple> flow_ledger;      // (app, source, sink)
    std::vector<ContextTriple> initiate_ledger;  // (app, component, action)

    EdgeList& operator[](Relation r) { return edges[static_cast<std::size_t>(r)]; }
    const EdgeList& operator[](Relation r) const { return edges[static_cast<std::size_t>(r)]; }

    bool contains(Relation r, std::uint32_t a, std::uint32_t b) const;
    const std::vector<ContextTriple>* ledger(Relation r) const;
};

struct CorpusIndex {
    EntityTable entities;
    RelationSet relations;
};

// Entities are interned in sorted token order, so ids do not depend on the
// order of the records.
CorpusIndex build_relations(const Corpus& corpus);

struct TokenCount {
    std::string token;
    std::size_t count = 0;
};

struct JointCount {
    std::string token;
    std::size_t benign_count = 0;
    std::size_t malware_count = 0;
};

struct ClassStats {
    std::vector<TokenCount> benign;
    std::vector<TokenCount> malware;
    std::vector<JointCount> joint;
};

struct CorpusStats {
    std::size_t benign_apps = 0;
    std::size_t malware_apps = 0;
    std::size_t unlabeled_apps = 0;
    // conditions, guarded_apis, sources, sinks, component_kinds, actions
    std::map<std::string, ClassStats> classes;
};

CorpusStats corpus_stats(const Corpus& corpus, std::size_t k);
std::string stats_to_json(const CorpusStats& stats);

}  // namespace malflows
