#include "malflows/pipeline.hpp"

#include "malflows/error.hpp"
#include "malflows/rng.hpp"

#include <cmath>

namespace malflows {

Hin view_graph(const CorpusIndex& index, View view, bool refine) {
    Hin h = build_view_hin(index, view);
    if (!refine) return h;
    return refine_hin(h, refinement_config(view), index);
}

WordVectors embed_view(const Hin& graph, const MetaPathGroup& group, const WalkParams& walk,
                       const SgnsParams& sgns) {
    if (group.view != graph.view()) {
        throw Error("group " + group.name + " belongs to view " + std::string(to_string(group.view)) +
                    ", graph is " + std::string(to_string(graph.view())));
    }
    const auto tokens = walks_to_tokens(graph, sample_walks(graph, group, walk));
    const Vocab vocab = build_vocab(tokens, sgns.min_count, walk_start_tokens(tokens));
    return to_word_vectors(vocab, train_skipgram(tokens, vocab, sgns).table);
}

std::array<WordVectors, 3> embed_all_views(const Corpus& corpus, const PipelineParams& params) {
    const CorpusIndex index = build_relations(corpus);
    std::array<WordVectors, 3> out;
    for (std::size_t v = 0; v < kViews.size(); ++v) {
        const View view = kViews[v];
        const MetaPathGroup group = resolve_group(params.groups[v]);
        if (group.view != view) throw Error("group " + params.groups[v] + " does not belong to view " +
                                            std::string(to_string(view)));
        WalkParams walk = params.walk;
        walk.seed = derive_seed(params.seed, v, 0x3a1c);
        SgnsParams sgns = params.sgns;
        sgns.seed = derive_seed(params.seed, v, 0x5c9);
        out[v] = embed_view(view_graph(index, view, params.refine), group, walk, sgns);
    }
    return out;
}

std::vector<Sample> make_samples(const Corpus& corpus, const std::array<WordVectors, 3>& views) {
    const std::size_t dim = views[0].dim;
    for (const auto& wv : views) {
        if (wv.dim != dim) throw Error("view embeddings differ in dimension");
    }
    std::vector<Sample> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus) {
        std::array<std::optional<std::vector<float>>, 3> vecs;
        for (std::size_t v = 0; v < views.size(); ++v) vecs[v] = app_view_vector(views[v], r.app_id);
        out.push_back({r.app_id, ChannelInput::from_views(vecs, dim), r.label, r.period});
    }
    return out;
}

Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw Error("test fraction must be in [0, 1]");
    Rng rng(derive_seed(seed, 0x5b117));
    std::vector<bool> is_test(labels.size(), false);
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) idx.push_back(i);
        }
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = true;
    }
    Split s;
    for (std::size_t i = 0; i < labels.size(); ++i) (is_test[i] ? s.test : s.train).push_back(i);
    return s;
}

}  // namespace malflows
