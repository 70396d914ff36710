#pragma once

#include "malflows/rng.hpp"
#include "malflows/walk.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace malflows {

/// Token <-> index map sorted by (count desc, token asc), with the unigram^0.75
/// distribution used to draw negatives.
class Vocab {
public:
    Vocab() = default;
    Vocab(std::vector<std::string> tokens, std::vector<std::uint64_t> counts);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::uint32_t i) const { return tokens_[i]; }
    std::uint64_t count(std::uint32_t i) const { return counts_[i]; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::optional<std::uint32_t> find(std::string_view token) const;

    double noise_probability(std::uint32_t i) const;
    std::uint32_t sample_negative(Rng& rng) const;

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<double> cumulative_;
};

// Tokens seen fewer than min_count times are dropped unless listed in `keep`
// (the app tokens). Walks shorter than two tokens are ignored.
Vocab build_vocab(const std::vector<TokenWalk>& walks, std::size_t min_count,
                  const std::set<std::string>& keep = {});

// First token of every walk: walks always start at an app.
std::set<std::string> walk_start_tokens(const std::vector<TokenWalk>& walks);

template <class Real>
struct EmbeddingTableT {
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::vector<Real> input;   // rows x dim, the learned node vectors
    std::vector<Real> output;  // rows x dim, context vectors

    EmbeddingTableT() = default;
    EmbeddingTableT(std::size_t rows_, std::size_t dim_)
        : dim(dim_), rows(rows_), input(rows_ * dim_, Real(0)), output(rows_ * dim_, Real(0)) {}

    std::span<Real> in(std::size_t r) { return {input.data() + r * dim, dim}; }
    std::span<const Real> in(std::size_t r) const { return {input.data() + r * dim, dim}; }
    std::span<Real> out(std::size_t r) { return {output.data() + r * dim, dim}; }
    std::span<const Real> out(std::size_t r) const { return {output.data() + r * dim, dim}; }
};

using EmbeddingTable = EmbeddingTableT<float>;

template <class Real>
struct SgnsGradient {
    std::vector<Real> center;  // d loss / d input[center]
    // d loss / d output[row] for the context followed by each negative, in call order
    std::vector<std::pair<std::uint32_t, std::vector<Real>>> outputs;
};

// Negated objective: -log s(u_ctx . v_c) - sum_neg log s(-u_neg . v_c).
template <class Real>
double sgns_loss(const EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives);

template <class Real>
double sgns_gradient(const EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                     std::span<const std::uint32_t> negatives, SgnsGradient<Real>& grad);

// One gradient step of size lr on the loss above; returns the loss before the step.
template <class Real>
double sgns_step(EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives, Real lr);

struct SgnsParams {
    std::size_t dim = 128;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    std::size_t min_count = 1;
    std::uint64_t seed = 1;
    double explosion_bound = 1e3;
};

struct SgnsResult {
    EmbeddingTable table;
    std::vector<double> epoch_loss;  // mean loss per (center, context) pair
};

SgnsResult train_skipgram(const std::vector<TokenWalk>& walks, const Vocab& vocab, const SgnsParams& p);

/// Token -> vector lookup as stored in emb.vec.
struct WordVectors {
    std::size_t dim = 0;
    std::vector<std::string> tokens;
    std::vector<float> data;
    std::unordered_map<std::string, std::size_t> index;

    std::optional<std::span<const float>> find(std::string_view token) const;
};

WordVectors to_word_vectors(const Vocab& vocab, const EmbeddingTable& table);
std::string word_vectors_to_text(const WordVectors& wv);
void write_word_vectors(const std::filesystem::path& path, const WordVectors& wv);
WordVectors read_word_vectors(const std::filesystem::path& path);

// The app's own learned vector; nullopt when the app never appeared in this
// view's walks.
std::optional<std::vector<float>> app_view_vector(const WordVectors& wv, std::string_view app_id);

}  // namespace malflows
