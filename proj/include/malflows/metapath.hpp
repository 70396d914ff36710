#pragma once

#include "malflows/hin.hpp"

#include <string>
#include <vector>

namespace malflows {

enum class Orientation : std::uint8_t { Content, Action };

struct MetaPathStep {
    Relation rel;
    Direction dir;

    friend bool operator==(const MetaPathStep&, const MetaPathStep&) = default;
};

// Kind reached by taking `step` from `from`.
EntityKind step_target(const MetaPathStep& step);
EntityKind step_source(const MetaPathStep& step);

struct MetaPath {
    std::string name;
    std::vector<EntityKind> kinds;
    std::vector<MetaPathStep> steps;
    Orientation orientation = Orientation::Content;

    std::size_t length() const { return steps.size(); }
    bool is_symmetric() const;
};

/// A view's meta-paths sampled together by one walker. Builtin groups hold one
/// content-oriented and one action-oriented path; single-path groups are used
/// for ablations.
struct MetaPathGroup {
    std::string name;
    View view = View::CF;
    std::vector<MetaPath> paths;

    const MetaPath* content() const;
    const MetaPath* action() const;
};

std::vector<MetaPathGroup> builtin_groups();
const MetaPath& builtin_metapath(std::string_view name);  // "MP1".."MP6"

// "MPG1".."MPG3" or a single meta-path name "MP1".."MP6" (a one-path group
// over that path's view).
MetaPathGroup resolve_group(std::string_view name);

std::vector<std::string> validate_metapath(const MetaPath& mp);
std::vector<std::string> validate_group(const MetaPathGroup& g);

std::string metapath_to_string(const MetaPath& mp);

struct InstanceList {
    std::vector<std::vector<std::uint32_t>> paths;
    bool truncated = false;
};

// All instances of mp in h, starting at App nodes in id order and expanding
// neighbors in id order. Stops after `cap` instances.
InstanceList enumerate_instances(const Hin& h, const MetaPath& mp, std::size_t cap);

// Optional meta-path config: a JSON list of
// {name, kinds:[...], relations:[{rel, dir:"fwd"|"inv"}], orientation, group}.
std::vector<MetaPathGroup> groups_from_json(std::string_view text);

}  // namespace malflows
