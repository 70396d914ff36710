#pragma once

#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace malflows {

/// Walker position. At an App node the active meta-path is re-drawn, so
/// `path` is only meaningful when `position` > 0.
struct WalkState {
    std::uint32_t node = 0;
    std::size_t path = 0;      // index into MetaPathGroup::paths
    std::size_t position = 0;  // index into that path's kinds
};

struct WalkParams {
    std::size_t walks_per_app = 10;
    std::size_t walk_length = 80;  // nodes
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct Transition {
    std::uint32_t node;
    double probability;
};

// Empty result means the walk ends here.
std::vector<Transition> transition_distribution(const Hin& h, const MetaPathGroup& g,
                                                const WalkState& s);

using Walk = std::vector<std::uint32_t>;

// walks_per_app walks from every App node, ordered by (app node id, walk
// index). Each walk has its own RNG stream, so output does not depend on
// params.threads.
std::vector<Walk> sample_walks(const Hin& h, const MetaPathGroup& g, const WalkParams& p);

struct ConformResult {
    bool ok = true;
    std::size_t first_violation = 0;  // index of the offending node when !ok
};

ConformResult walk_conforms(std::span<const std::uint32_t> walk, const MetaPathGroup& g, const Hin& h);

using TokenWalk = std::vector<std::string>;

// Clone nodes emit their parent's token.
std::vector<TokenWalk> walks_to_tokens(const Hin& h, const std::vector<Walk>& walks);

// One walk per line, tokens percent-escaped. Walks shorter than two nodes carry
// no co-occurrence and are not written.
void write_walks(const std::filesystem::path& path, const std::vector<TokenWalk>& walks);
std::string walks_to_text(const std::vector<TokenWalk>& walks);
std::vector<TokenWalk> read_walks(const std::filesystem::path& path);

// MALFLOWS_THREADS if set, else hardware concurrency.
unsigned default_threads();

}  // namespace malflows
