#include "malflows/embed.hpp"

#include "malflows/error.hpp"
#include "malflows/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace malflows {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

template <class Real>
double dot(std::span<const Real> a, std::span<const Real> b) {
    Real s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return static_cast<double>(s);
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
    : tokens_(std::move(tokens)), counts_(std::move(counts)) {
    if (tokens_.size() != counts_.size()) throw Error("vocab tokens/counts size mismatch");
    index_.reserve(tokens_.size());
    cumulative_.reserve(tokens_.size());
    double acc = 0.0;
    for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
        index_.emplace(tokens_[i], i);
        acc += std::pow(static_cast<double>(counts_[i]), 0.75);
        cumulative_.push_back(acc);
    }
    for (auto& c : cumulative_) c /= acc;
    if (!cumulative_.empty()) cumulative_.back() = 1.0;
}

std::optional<std::uint32_t> Vocab::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double Vocab::noise_probability(std::uint32_t i) const {
    return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
}

std::uint32_t Vocab::sample_negative(Rng& rng) const {
    const double u = uniform_unit(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative_.begin());
}

Vocab build_vocab(const std::vector<TokenWalk>& walks, std::size_t min_count,
                  const std::set<std::string>& keep) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& w : walks) {
        if (w.size() < 2) continue;
        for (const auto& t : w) ++counts[t];
    }
    if (counts.empty()) throw Error("cannot build a vocabulary from an empty walk corpus");
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (auto& [t, c] : counts) {
        if (c >= min_count || keep.count(t)) entries.emplace_back(t, c);
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    std::vector<std::uint64_t> cs;
    for (auto& [t, c] : entries) {
        tokens.push_back(t);
        cs.push_back(c);
    }
    return Vocab(std::move(tokens), std::move(cs));
}

std::set<std::string> walk_start_tokens(const std::vector<TokenWalk>& walks) {
    std::set<std::string> out;
    for (const auto& w : walks)
        if (!w.empty()) out.insert(w.front());
    return out;
}

template <class Real>
double sgns_loss(const EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives) {
    const auto v = t.in(center);
    double loss = softplus(-dot<Real>(t.out(context), v));
    for (std::uint32_t n : negatives) loss += softplus(dot<Real>(t.out(n), v));
    return loss;
}

template <class Real>
double sgns_gradient(const EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                     std::span<const std::uint32_t> negatives, SgnsGradient<Real>& grad) {
    const std::size_t d = t.dim;
    const auto v = t.in(center);
    grad.center.assign(d, Real(0));
    grad.outputs.clear();
    double loss = 0.0;
    auto term = [&](std::uint32_t row, double label) {
        const auto u = t.out(row);
        const double score = dot<Real>(u, v);
        loss += label > 0 ? softplus(-score) : softplus(score);
        const auto g = static_cast<Real>(sigmoid(score) - label);
        std::vector<Real> gu(d);
        for (std::size_t i = 0; i < d; ++i) {
            grad.center[i] += g * u[i];
            gu[i] = g * v[i];
        }
        grad.outputs.emplace_back(row, std::move(gu));
    };
    term(context, 1.0);
    for (std::uint32_t n : negatives) term(n, 0.0);
    return loss;
}

template <class Real>
double sgns_step(EmbeddingTableT<Real>& t, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives, Real lr) {
    const std::size_t d = t.dim;
    auto v = t.in(center);
    // Accumulate the center gradient against the pre-step output vectors, then
    // apply everything.
    thread_local std::vector<Real> gv;
    gv.assign(d, Real(0));
    double loss = 0.0;
    auto term = [&](std::uint32_t row, bool positive) {
        auto u = t.out(row);
        Real score = 0;
        for (std::size_t i = 0; i < d; ++i) score += u[i] * v[i];
        loss += positive ? softplus(-static_cast<double>(score)) : softplus(static_cast<double>(score));
        const auto g = static_cast<Real>(sigmoid(static_cast<double>(score)) - (positive ? 1.0 : 0.0));
        for (std::size_t i = 0; i < d; ++i) gv[i] += g * u[i];
        const Real step = lr * g;
        for (std::size_t i = 0; i < d; ++i) u[i] -= step * v[i];
    };
    term(context, true);
    for (std::uint32_t n : negatives) term(n, false);
    for (std::size_t i = 0; i < d; ++i) v[i] -= lr * gv[i];
    return loss;
}

template double sgns_loss<float>(const EmbeddingTableT<float>&, std::uint32_t, std::uint32_t,
                                 std::span<const std::uint32_t>);
template double sgns_loss<double>(const EmbeddingTableT<double>&, std::uint32_t, std::uint32_t,
                                  std::span<const std::uint32_t>);
template double sgns_gradient<float>(const EmbeddingTableT<float>&, std::uint32_t, std::uint32_t,
                                     std::span<const std::uint32_t>, SgnsGradient<float>&);
template double sgns_gradient<double>(const EmbeddingTableT<double>&, std::uint32_t, std::uint32_t,
                                      std::span<const std::uint32_t>, SgnsGradient<double>&);
template double sgns_step<float>(EmbeddingTableT<float>&, std::uint32_t, std::uint32_t,
                                 std::span<const std::uint32_t>, float);
template double sgns_step<double>(EmbeddingTableT<double>&, std::uint32_t, std::uint32_t,
                                  std::span<const std::uint32_t>, double);

SgnsResult train_skipgram(const std::vector<TokenWalk>& walks, const Vocab& vocab, const SgnsParams& p) {
    if (p.window < 1) throw Error("window must be at least 1");
    if (p.negatives < 1) throw Error("negatives must be at least 1");
    if (p.dim < 1) throw Error("dim must be positive");

    SgnsResult result{EmbeddingTable(vocab.size(), p.dim), {}};
    EmbeddingTable& table = result.table;
    {
        Rng init(derive_seed(p.seed, 0x1417));
        const double bound = 0.5 / static_cast<double>(p.dim);
        for (auto& x : table.input) x = static_cast<float>(uniform_real(init, -bound, bound));
    }
    if (p.epochs == 0) return result;

    std::vector<std::vector<std::uint32_t>> seqs;
    std::size_t tokens_per_epoch = 0;
    for (const auto& w : walks) {
        if (w.size() < 2) continue;
        std::vector<std::uint32_t> s;
        s.reserve(w.size());
        for (const auto& t : w)
            if (auto i = vocab.find(t)) s.push_back(*i);
        if (s.size() < 2) continue;
        tokens_per_epoch += s.size();
        seqs.push_back(std::move(s));
    }
    const double total_tokens = static_cast<double>(tokens_per_epoch * p.epochs);

    std::vector<std::size_t> order(seqs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::uint32_t> negs;
    std::size_t processed = 0;
    Rng rng(derive_seed(p.seed, 0x5695));
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
        double loss = 0.0;
        std::size_t pairs = 0;
        for (std::size_t idx : order) {
            const auto& s = seqs[idx];
            for (std::size_t i = 0; i < s.size(); ++i, ++processed) {
                const auto lr = static_cast<float>(
                    p.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed) / total_tokens));
                // word2vec-style reduced window: effective radius in [1, window]
                const std::size_t radius = 1 + uniform_index(rng, p.window);
                const std::size_t lo = i >= radius ? i - radius : 0;
                const std::size_t hi = std::min(s.size() - 1, i + radius);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    negs.clear();
                    while (negs.size() < p.negatives) {
                        const auto n = vocab.sample_negative(rng);
                        if (n != s[j]) negs.push_back(n);
                        else if (vocab.size() == 1) break;
                    }
                    loss += sgns_step(table, s[i], s[j], negs, lr);
                    ++pairs;
                }
            }
        }
        result.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
    }

    for (std::size_t r = 0; r < table.rows; ++r) {
        for (auto span : {table.in(r), table.out(r)}) {
            double sq = 0.0;
            for (float x : span) sq += static_cast<double>(x) * x;
            if (!std::isfinite(sq) || std::sqrt(sq) > p.explosion_bound) {
                throw Error("skip-gram diverged: vector norm of '" + vocab.token(static_cast<std::uint32_t>(r)) +
                            "' exceeds " + std::to_string(p.explosion_bound));
            }
        }
    }
    return result;
}

std::optional<std::span<const float>> WordVectors::find(std::string_view token) const {
    auto it = index.find(std::string(token));
    if (it == index.end()) return std::nullopt;
    return std::span<const float>(data.data() + it->second * dim, dim);
}

WordVectors to_word_vectors(const Vocab& vocab, const EmbeddingTable& table) {
    WordVectors wv;
    wv.dim = table.dim;
    wv.tokens = vocab.tokens();
    wv.data = table.input;
    for (std::size_t i = 0; i < wv.tokens.size(); ++i) wv.index.emplace(wv.tokens[i], i);
    return wv;
}

std::string word_vectors_to_text(const WordVectors& wv) {
    std::string out = std::to_string(wv.tokens.size()) + " " + std::to_string(wv.dim) + "\n";
    char buf[32];
    for (std::size_t i = 0; i < wv.tokens.size(); ++i) {
        out += escape_token(wv.tokens[i]);
        for (std::size_t k = 0; k < wv.dim; ++k) {
            std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(wv.data[i * wv.dim + k]));
            out += buf;
        }
        out.push_back('\n');
    }
    return out;
}

void write_word_vectors(const std::filesystem::path& path, const WordVectors& wv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << word_vectors_to_text(wv);
}

WordVectors read_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header", 1, 0);
    auto header = split_whitespace(line);
    WordVectors wv;
    std::size_t n = 0;
    try {
        if (header.size() != 2) throw std::invalid_argument("header");
        n = std::stoul(header[0]);
        wv.dim = std::stoul(header[1]);
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": header must be 'N d'", 1, 0);
    }
    wv.data.reserve(n * wv.dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto cols = split_whitespace(line);
        if (cols.empty()) continue;
        if (cols.size() != wv.dim + 1) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " +
                                 std::to_string(cols.size() - 1) + " values, expected " + std::to_string(wv.dim),
                             line_no, 0);
        }
        const std::string token = unescape_token(cols[0]);
        if (!wv.index.emplace(token, wv.tokens.size()).second) {
            throw SchemaError(path.string() + ": duplicate token '" + token + "'");
        }
        wv.tokens.push_back(token);
        for (std::size_t k = 1; k < cols.size(); ++k) {
            char* end = nullptr;
            const float x = std::strtof(cols[k].c_str(), &end);
            if (end == cols[k].c_str() || *end != '\0') {
                throw ParseError(path.string() + ": bad number on line " + std::to_string(line_no), line_no, 0);
            }
            wv.data.push_back(x);
        }
    }
    if (wv.tokens.size() != n) {
        throw SchemaError(path.string() + ": header announces " + std::to_string(n) + " vectors, found " +
                          std::to_string(wv.tokens.size()));
    }
    return wv;
}

std::optional<std::vector<float>> app_view_vector(const WordVectors& wv, std::string_view app_id) {
    auto row = wv.find(app_id);
    if (!row) return std::nullopt;
    return std::vector<float>(row->begin(), row->end());
}

}  // namespace malflows
