#pragma once

#include "malflows/corpus.hpp"
#include "malflows/embed.hpp"
#include "malflows/fusion.hpp"
#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"
#include "malflows/walk.hpp"

#include <array>
#include <string>
#include <vector>

namespace malflows {

// The graph a view is walked on: built from the corpus index and, unless
// `refine` is false, context-refined with the view's builtin group.
Hin view_graph(const CorpusIndex& index, View view, bool refine);

// Walks then skip-gram for one view. App tokens are always kept in the vocabulary.
WordVectors embed_view(const Hin& graph, const MetaPathGroup& group, const WalkParams& walk,
                       const SgnsParams& sgns);

struct PipelineParams {
    WalkParams walk;
    SgnsParams sgns;
    bool refine = true;
    std::array<std::string, 3> groups{"MPG1", "MPG2", "MPG3"};  // per view, CF, DF, ICC
    std::uint64_t seed = 1;
};

// Per-view embeddings in CF, DF, ICC order. Each view gets its own seeds
// derived from params.seed.
std::array<WordVectors, 3> embed_all_views(const Corpus& corpus, const PipelineParams& params);

// One sample per record; a view the app never appeared in is a zero channel.
std::vector<Sample> make_samples(const Corpus& corpus, const std::array<WordVectors, 3>& views);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified by label; both parts keep the original order.
Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

}  // namespace malflows
