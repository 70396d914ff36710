#pragma once

#include "malflows/corpus.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malflows {

enum class View : std::uint8_t { CF, DF, ICC };
inline constexpr std::array<View, 3> kViews{View::CF, View::DF, View::ICC};

std::string_view to_string(View v);
std::optional<View> parse_view(std::string_view s);
std::span<const Relation> view_relations(View v);

enum class Direction : std::uint8_t { Forward, Inverse };

struct HinNode {
    EntityKind kind = EntityKind::App;
    std::string token;
    std::optional<std::string> context;  // owning app id, set only on context clones

    friend auto operator<=>(const HinNode&, const HinNode&) = default;
};

struct HinEdge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    Relation rel = Relation::Include;

    friend bool operator==(const HinEdge&, const HinEdge&) = default;
};

/// Typed multigraph for one view. Nodes are kept sorted by (kind, token,
/// context) and edges by (rel, src, dst) without duplicates, so node ids and
/// serialized output are canonical. Each relation is stored once and can be
/// walked in either direction.
class Hin {
public:
    Hin() = default;
    // Edge endpoints index into `nodes` as given; both lists are canonicalized.
    Hin(View view, std::vector<HinNode> nodes, std::vector<HinEdge> edges);

    View view() const { return view_; }
    const std::vector<HinNode>& nodes() const { return nodes_; }
    const std::vector<HinEdge>& edges() const { return edges_; }
    const HinNode& node(std::uint32_t id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    std::span<const std::uint32_t> neighbors(std::uint32_t node, Relation rel, Direction dir) const;
    bool has_edge(std::uint32_t src, std::uint32_t dst, Relation rel) const;
    std::optional<std::uint32_t> find(EntityKind kind, std::string_view token,
                                      const std::optional<std::string>& context = std::nullopt) const;
    std::vector<std::uint32_t> nodes_of_kind(EntityKind kind) const;

    friend bool operator==(const Hin& a, const Hin& b) {
        return a.view_ == b.view_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    struct Csr {
        std::vector<std::uint32_t> offsets;
        std::vector<std::uint32_t> targets;
    };
    const Csr& csr(Relation rel, Direction dir) const {
        return adjacency_[static_cast<std::size_t>(rel) * 2 + static_cast<std::size_t>(dir)];
    }

    View view_ = View::CF;
    std::vector<HinNode> nodes_;
    std::vector<HinEdge> edges_;
    std::array<Csr, kRelations * 2> adjacency_;
};

Hin build_view_hin(const CorpusIndex& index, View view);

/// Inputs of context refinement for one meta-path group: anchors are the nodes
/// of `anchor_kind` reached from App by `content_relation` that have outgoing
/// `action_relation` edges. A clone keeps an action edge to s only if its app
/// is linked to s by `constraint_relation`.
struct RefinementConfig {
    View view = View::CF;
    EntityKind anchor_kind = EntityKind::Condition;
    Relation content_relation = Relation::Include;
    Relation action_relation = Relation::Trigger;
    Relation constraint_relation = Relation::Use;
};

struct MetaPathGroup;
RefinementConfig refinement_config(const MetaPathGroup& group);
RefinementConfig refinement_config(View view);

Hin refine_hin(const Hin& h, const RefinementConfig& cfg, const CorpusIndex& index);

/// Refined graph assembled straight from the records' per-app contexts. Shares
/// no code with build_relations/refine_hin and serves as their oracle.
Hin oracle_refined_hin(const Corpus& corpus, View view);

std::vector<std::string> validate_schema(const Hin& h);

std::string hin_to_json(const Hin& h, const std::string& meta_json = "{}");
Hin hin_from_json(std::string_view text);

}  // namespace malflows
