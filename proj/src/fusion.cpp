#include "malflows/fusion.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace malflows {

using nlohmann::json;

namespace {

constexpr double kMaskedLogit = -1e30;

template <class Real>
Real sigmoid(Real x) {
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

template <class Real>
Real softplus(Real x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class Real>
struct Trace {
    // attention
    std::vector<Real> pooled;
    std::vector<Real> pre;
    std::vector<Real> hidden;
    std::vector<Real> weights;
    std::vector<Real> fused;
    // mlp: acts[l] is the input of layer l, acts.back() the final logit
    std::vector<std::vector<Real>> acts;
    std::vector<std::vector<Real>> preacts;
    std::vector<std::vector<Real>> masks;  // empty when the layer has no dropout applied
};

template <class Real>
void check_input(const ChannelInputT<Real>& x) {
    if (x.values.size() != x.channels * x.dim || x.mask.size() != x.channels) {
        throw Error("channel input shape mismatch");
    }
}

template <class Real>
void attention_forward(const ChannelInputT<Real>& x, const AttentionParamsT<Real>& a, Trace<Real>& t) {
    check_input(x);
    const std::size_t c = x.channels;
    const std::size_t d = x.dim;
    if (a.channels != c || a.w0.size() != c * kAttentionHidden || a.w1.size() != c * kAttentionHidden) {
        throw Error("attention parameter shape mismatch");
    }
    if (std::all_of(x.mask.begin(), x.mask.end(), [](bool m) { return m; })) {
        throw NoViewError("no-view app: every channel is empty");
    }
    if (d == 0) throw Error("channel dimension must be positive");

    t.pooled.assign(c, Real(0));
    for (std::size_t ch = 0; ch < c; ++ch) {
        const auto v = x.channel(ch);
        Real sum = 0;
        Real mx = v[0];
        for (Real e : v) {
            sum += e;
            mx = std::max(mx, e);
        }
        t.pooled[ch] = sum / static_cast<Real>(d) + mx;
    }
    t.pre.assign(kAttentionHidden, Real(0));
    t.hidden.assign(kAttentionHidden, Real(0));
    for (std::size_t k = 0; k < kAttentionHidden; ++k) {
        Real s = 0;
        for (std::size_t ch = 0; ch < c; ++ch) s += a.w0[ch * kAttentionHidden + k] * t.pooled[ch];
        t.pre[k] = s;
        t.hidden[k] = s > 0 ? s : Real(0);
    }
    std::vector<Real> logits(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        Real s = 0;
        for (std::size_t k = 0; k < kAttentionHidden; ++k) s += a.w1[k * c + ch] * t.hidden[k];
        logits[ch] = x.mask[ch] ? static_cast<Real>(kMaskedLogit) + s : s;
    }
    const Real top = *std::max_element(logits.begin(), logits.end());
    t.weights.assign(c, Real(0));
    Real z = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        t.weights[ch] = std::exp(logits[ch] - top);
        z += t.weights[ch];
    }
    for (auto& w : t.weights) w /= z;

    t.fused.assign(d, Real(0));
    for (std::size_t ch = 0; ch < c; ++ch) {
        const auto v = x.channel(ch);
        for (std::size_t j = 0; j < d; ++j) t.fused[j] += t.weights[ch] * v[j];
    }
}

template <class Real>
void add_forward(const ChannelInputT<Real>& x, Trace<Real>& t) {
    check_input(x);
    if (std::all_of(x.mask.begin(), x.mask.end(), [](bool m) { return m; })) {
        throw NoViewError("no-view app: every channel is empty");
    }
    t.fused.assign(x.dim, Real(0));
    for (std::size_t ch = 0; ch < x.channels; ++ch) {
        const auto v = x.channel(ch);
        for (std::size_t j = 0; j < x.dim; ++j) t.fused[j] += v[j];
    }
}

template <class Real>
Real mlp_run(std::span<const Real> y0, const MlpParamsT<Real>& m, Rng* rng, Trace<Real>& t) {
    if (m.layers.empty()) throw Error("empty MLP");
    if (y0.size() != m.layers.front().in) {
        throw Error("MLP expects input width " + std::to_string(m.layers.front().in) + ", got " +
                    std::to_string(y0.size()));
    }
    t.acts.assign(1, std::vector<Real>(y0.begin(), y0.end()));
    t.preacts.clear();
    t.masks.clear();
    const Real keep_scale = Real(1) / (Real(1) - m.dropout_rate);
    for (const auto& layer : m.layers) {
        const auto& in = t.acts.back();
        std::vector<Real> z(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            Real s = layer.b[o];
            const Real* row = layer.w.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * in[i];
            z[o] = s;
        }
        std::vector<Real> a(z);
        if (layer.relu) {
            for (auto& v : a) v = v > 0 ? v : Real(0);
        }
        std::vector<Real> mask;
        if (layer.dropout && rng != nullptr && m.dropout_rate > 0) {
            mask.resize(layer.out);
            for (std::size_t o = 0; o < layer.out; ++o) {
                mask[o] = uniform_unit(*rng) < static_cast<double>(m.dropout_rate) ? Real(0) : keep_scale;
                a[o] *= mask[o];
            }
        }
        t.preacts.push_back(std::move(z));
        t.masks.push_back(std::move(mask));
        t.acts.push_back(std::move(a));
    }
    if (t.acts.back().size() != 1) throw Error("MLP output layer must have one unit");
    return t.acts.back()[0];
}

template <class Real>
double backward(const FusionModelT<Real>& model, const ChannelInputT<Real>& x, int label, const Trace<Real>& t,
                FusionModelT<Real>& grad) {
    const Real z = t.acts.back()[0];
    const Real y = static_cast<Real>(label);
    const double loss = static_cast<double>(softplus(z) - y * z);

    std::vector<Real> delta{sigmoid(z) - y};  // d loss / d preactivation of the current layer
    const auto& layers = model.mlp.layers;
    std::vector<Real> d_in;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        auto& g = grad.mlp.layers[l];
        const auto& in = t.acts[l];
        d_in.assign(layer.in, Real(0));
        for (std::size_t o = 0; o < layer.out; ++o) {
            const Real dl = delta[o];
            g.b[o] += dl;
            const Real* row = layer.w.data() + o * layer.in;
            Real* grow = g.w.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) {
                grow[i] += dl * in[i];
                d_in[i] += row[i] * dl;
            }
        }
        if (l == 0) break;
        const auto& prev = layers[l - 1];
        delta.assign(prev.out, Real(0));
        for (std::size_t i = 0; i < prev.out; ++i) {
            Real v = d_in[i];
            if (!t.masks[l - 1].empty()) v *= t.masks[l - 1][i];
            if (prev.relu && t.preacts[l - 1][i] <= 0) v = 0;
            delta[i] = v;
        }
    }

    if (model.mode == FusionMode::Attention) {
        const std::size_t c = x.channels;
        const std::size_t d = x.dim;
        const auto& a = model.attention;
        std::vector<Real> d_weight(c, Real(0));
        for (std::size_t ch = 0; ch < c; ++ch) {
            const auto v = x.channel(ch);
            for (std::size_t j = 0; j < d; ++j) d_weight[ch] += d_in[j] * v[j];
        }
        Real dot = 0;
        for (std::size_t ch = 0; ch < c; ++ch) dot += t.weights[ch] * d_weight[ch];
        std::vector<Real> d_logit(c);
        for (std::size_t ch = 0; ch < c; ++ch) d_logit[ch] = t.weights[ch] * (d_weight[ch] - dot);
        std::vector<Real> d_hidden(kAttentionHidden, Real(0));
        for (std::size_t k = 0; k < kAttentionHidden; ++k) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                grad.attention.w1[k * c + ch] += d_logit[ch] * t.hidden[k];
                d_hidden[k] += a.w1[k * c + ch] * d_logit[ch];
            }
        }
        for (std::size_t k = 0; k < kAttentionHidden; ++k) {
            if (t.pre[k] <= 0) continue;
            for (std::size_t ch = 0; ch < c; ++ch) {
                grad.attention.w0[ch * kAttentionHidden + k] += d_hidden[k] * t.pooled[ch];
            }
        }
    }
    return loss;
}

template <class Real>
void uniform_fill(std::vector<Real>& v, double bound, Rng& rng) {
    for (auto& x : v) x = static_cast<Real>(uniform_real(rng, -bound, bound));
}

}  // namespace

template <class Real>
ChannelInputT<Real> ChannelInputT<Real>::from_matrix(std::size_t channels, std::size_t dim, std::vector<Real> values) {
    if (values.size() != channels * dim) throw Error("channel matrix shape mismatch");
    ChannelInputT x;
    x.channels = channels;
    x.dim = dim;
    x.values = std::move(values);
    x.mask.assign(channels, false);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        const auto v = x.channel(ch);
        x.mask[ch] = std::all_of(v.begin(), v.end(), [](Real e) { return e == Real(0); });
    }
    return x;
}

template <class Real>
ChannelInputT<Real> ChannelInputT<Real>::from_views(std::span<const std::optional<std::vector<float>>> views,
                                                    std::size_t dim) {
    std::vector<Real> values(views.size() * dim, Real(0));
    for (std::size_t ch = 0; ch < views.size(); ++ch) {
        if (!views[ch]) continue;
        if (views[ch]->size() != dim) throw Error("view vector has wrong dimension");
        std::copy(views[ch]->begin(), views[ch]->end(), values.begin() + static_cast<std::ptrdiff_t>(ch * dim));
    }
    return from_matrix(views.size(), dim, std::move(values));
}

template <class Real>
AttentionOutput<Real> channel_attention(const ChannelInputT<Real>& x, const AttentionParamsT<Real>& a) {
    Trace<Real> t;
    attention_forward(x, a, t);
    return {std::move(t.weights), std::move(t.fused)};
}

template <class Real>
MlpParamsT<Real> make_mlp(std::span<const std::size_t> widths, std::span<const std::size_t> dropout_layers,
                          Real dropout_rate, Rng& rng) {
    if (widths.size() < 2) throw Error("MLP needs at least an input and an output width");
    if (widths.back() != 1) throw Error("MLP output width must be 1");
    if (dropout_rate < 0 || dropout_rate >= 1) throw Error("dropout rate must be in [0, 1)");
    MlpParamsT<Real> m;
    m.dropout_rate = dropout_rate;
    for (std::size_t i = 1; i < widths.size(); ++i) {
        DenseLayerT<Real> layer;
        layer.in = widths[i - 1];
        layer.out = widths[i];
        layer.relu = i + 1 < widths.size();
        layer.dropout = layer.relu &&
                        std::find(dropout_layers.begin(), dropout_layers.end(), i) != dropout_layers.end();
        layer.w.resize(layer.in * layer.out);
        layer.b.assign(layer.out, Real(0));
        const double bound = layer.relu ? std::sqrt(6.0 / static_cast<double>(layer.in))
                                        : std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        uniform_fill(layer.w, bound, rng);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

template <class Real>
AttentionParamsT<Real> make_attention(std::size_t channels, Rng& rng) {
    AttentionParamsT<Real> a;
    a.channels = channels;
    a.w0.resize(channels * kAttentionHidden);
    a.w1.resize(channels * kAttentionHidden);
    const double bound = std::sqrt(6.0 / static_cast<double>(channels + kAttentionHidden));
    uniform_fill(a.w0, bound, rng);
    uniform_fill(a.w1, bound, rng);
    return a;
}

template <class Real>
FusionModelT<Real> make_model(std::span<const std::size_t> widths, std::span<const std::size_t> dropout_layers,
                              Real dropout_rate, FusionMode mode, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xF05));
    FusionModelT<Real> m;
    m.mode = mode;
    m.seed = seed;
    m.attention = make_attention<Real>(kChannels, rng);
    m.mlp = make_mlp<Real>(widths, dropout_layers, dropout_rate, rng);
    return m;
}

template <class Real>
Real mlp_forward(std::span<const Real> y0, const MlpParamsT<Real>& m, Rng* dropout_rng) {
    Trace<Real> t;
    return sigmoid(mlp_run(y0, m, dropout_rng, t));
}

template <class Real>
Real predict(const FusionModelT<Real>& model, const ChannelInputT<Real>& x, Rng* dropout_rng) {
    Trace<Real> t;
    if (model.mode == FusionMode::Attention) attention_forward(x, model.attention, t);
    else add_forward(x, t);
    return sigmoid(mlp_run<Real>(t.fused, model.mlp, dropout_rng, t));
}

template <class Real>
double loss_and_gradient(const FusionModelT<Real>& model, const ChannelInputT<Real>& x, int label,
                         FusionModelT<Real>& grad, Rng* dropout_rng) {
    Trace<Real> t;
    if (model.mode == FusionMode::Attention) attention_forward(x, model.attention, t);
    else add_forward(x, t);
    mlp_run<Real>(t.fused, model.mlp, dropout_rng, t);
    return backward(model, x, label, t, grad);
}

template <class Real>
FusionModelT<Real> zeros_like(const FusionModelT<Real>& model) {
    FusionModelT<Real> z = model;
    for (auto s : parameter_spans(z)) std::fill(s.begin(), s.end(), Real(0));
    std::fill(z.attention.w0.begin(), z.attention.w0.end(), Real(0));
    std::fill(z.attention.w1.begin(), z.attention.w1.end(), Real(0));
    return z;
}

template <class Real>
std::vector<std::span<Real>> parameter_spans(FusionModelT<Real>& model) {
    std::vector<std::span<Real>> out;
    if (model.mode == FusionMode::Attention) {
        out.emplace_back(model.attention.w0);
        out.emplace_back(model.attention.w1);
    }
    for (auto& l : model.mlp.layers) {
        out.emplace_back(l.w);
        out.emplace_back(l.b);
    }
    return out;
}

#define MALFLOWS_INSTANTIATE(Real)                                                                              \
    template struct ChannelInputT<Real>;                                                                        \
    template AttentionOutput<Real> channel_attention(const ChannelInputT<Real>&, const AttentionParamsT<Real>&); \
    template MlpParamsT<Real> make_mlp(std::span<const std::size_t>, std::span<const std::size_t>, Real, Rng&);  \
    template AttentionParamsT<Real> make_attention(std::size_t, Rng&);                                          \
    template FusionModelT<Real> make_model(std::span<const std::size_t>, std::span<const std::size_t>, Real,    \
                                           FusionMode, std::uint64_t);                                          \
    template Real mlp_forward(std::span<const Real>, const MlpParamsT<Real>&, Rng*);                            \
    template Real predict(const FusionModelT<Real>&, const ChannelInputT<Real>&, Rng*);                         \
    template double loss_and_gradient(const FusionModelT<Real>&, const ChannelInputT<Real>&, int,              \
                                      FusionModelT<Real>&, Rng*);                                               \
    template FusionModelT<Real> zeros_like(const FusionModelT<Real>&);                                          \
    template std::vector<std::span<Real>> parameter_spans(FusionModelT<Real>&);

MALFLOWS_INSTANTIATE(float)
MALFLOWS_INSTANTIATE(double)
#undef MALFLOWS_INSTANTIATE

TrainResult train_classifier(std::span<const Sample> dataset, const TrainParams& params, std::uint64_t seed) {
    if (dataset.empty()) throw Error("cannot train on an empty dataset");
    for (const auto& s : dataset) {
        if (!s.label) throw SchemaError("training sample '" + s.app_id + "' has no label");
    }
    if (params.batch == 0) throw Error("batch size must be positive");
    const std::size_t dim = dataset.front().input.dim;
    if (params.widths.empty() || params.widths.front() != dim) {
        throw Error("MLP input width " + std::to_string(params.widths.empty() ? 0 : params.widths.front()) +
                    " does not match embedding dimension " + std::to_string(dim));
    }

    TrainResult result;
    result.model = make_model<float>(params.widths, params.dropout_layers, static_cast<float>(params.dropout),
                                     params.mode, seed);
    result.model.epochs = params.epochs;
    FusionModel& model = result.model;
    FusionModel grad = zeros_like(model);
    auto p = parameter_spans(model);
    auto g = parameter_spans(grad);
    std::vector<std::vector<double>> m1(p.size()), m2(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        m1[i].assign(p[i].size(), 0.0);
        m2[i].assign(p[i].size(), 0.0);
    }

    Rng shuffle(derive_seed(seed, 0x5a));
    Rng dropout(derive_seed(seed, 0xd7));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += params.batch) {
            const std::size_t end = std::min(order.size(), start + params.batch);
            for (auto s : g) std::fill(s.begin(), s.end(), 0.0f);
            for (std::size_t i = start; i < end; ++i) {
                const Sample& s = dataset[order[i]];
                epoch_loss += loss_and_gradient(model, s.input, *s.label, grad, &dropout);
            }
            ++step;
            const double scale = 1.0 / static_cast<double>(end - start);
            const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < p.size(); ++k) {
                for (std::size_t i = 0; i < p[k].size(); ++i) {
                    const double gi = static_cast<double>(g[k][i]) * scale;
                    m1[k][i] = params.beta1 * m1[k][i] + (1 - params.beta1) * gi;
                    m2[k][i] = params.beta2 * m2[k][i] + (1 - params.beta2) * gi * gi;
                    const double mhat = m1[k][i] / c1;
                    const double vhat = m2[k][i] / c2;
                    p[k][i] -= static_cast<float>(params.learning_rate * mhat / (std::sqrt(vhat) + params.epsilon));
                }
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    return result;
}

std::vector<double> predict_scores(const FusionModel& model, std::span<const Sample> dataset) {
    std::vector<double> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset) {
        try {
            out.push_back(static_cast<double>(predict(model, s.input)));
        } catch (const NoViewError&) {
            throw NoViewError("no-view app '" + s.app_id + "': absent from every view");
        }
    }
    return out;
}

std::string_view to_string(FusionMode m) { return m == FusionMode::Attention ? "attn" : "add"; }

std::optional<FusionMode> parse_fusion_mode(std::string_view s) {
    if (s == "attn") return FusionMode::Attention;
    if (s == "add") return FusionMode::Add;
    return std::nullopt;
}

namespace {

json matrix_json(const std::vector<float>& v, std::size_t rows, std::size_t cols) {
    json out = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        out.push_back(std::vector<float>(v.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                         v.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
    }
    return out;
}

std::vector<float> matrix_from_json(const json& j, std::size_t& rows, std::size_t& cols) {
    rows = j.size();
    cols = rows ? j.at(0).size() : 0;
    std::vector<float> out;
    out.reserve(rows * cols);
    for (const auto& row : j) {
        if (row.size() != cols) throw SchemaError("ragged matrix in model document");
        for (const auto& x : row) out.push_back(x.get<float>());
    }
    return out;
}

}  // namespace

std::string model_to_json(const FusionModel& model) {
    json j;
    const std::size_t c = model.attention.channels;
    j["attention"] = {{"w0", matrix_json(model.attention.w0, c, kAttentionHidden)},
                      {"w1", matrix_json(model.attention.w1, kAttentionHidden, c)}};
    json layers = json::array();
    for (const auto& l : model.mlp.layers) {
        layers.push_back({{"w", matrix_json(l.w, l.out, l.in)},
                          {"b", l.b},
                          {"activation", l.relu ? "relu" : "sigmoid"},
                          {"dropout", l.dropout}});
    }
    j["mlp"] = {{"layers", std::move(layers)}, {"dropout_rate", model.mlp.dropout_rate}};
    j["meta"] = {{"d", model.mlp.input_dim()},
                 {"c", c},
                 {"seed", model.seed},
                 {"epochs", model.epochs},
                 {"fusion", std::string(to_string(model.mode))}};
    return j.dump();
}

FusionModel model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed model document: ") + e.what(), 0, e.byte);
    }
    try {
        FusionModel m;
        const auto& meta = j.at("meta");
        auto mode = parse_fusion_mode(meta.value("fusion", std::string("attn")));
        if (!mode) throw SchemaError("unknown fusion mode in model document");
        m.mode = *mode;
        m.seed = meta.at("seed").get<std::uint64_t>();
        m.epochs = meta.at("epochs").get<std::size_t>();
        const auto c = meta.at("c").get<std::size_t>();
        std::size_t r = 0, k = 0;
        m.attention.channels = c;
        m.attention.w0 = matrix_from_json(j.at("attention").at("w0"), r, k);
        if (r != c || k != kAttentionHidden) throw SchemaError("W0 must be c x 6");
        m.attention.w1 = matrix_from_json(j.at("attention").at("w1"), r, k);
        if (r != kAttentionHidden || k != c) throw SchemaError("W1 must be 6 x c");
        m.mlp.dropout_rate = j.at("mlp").value("dropout_rate", 0.5f);
        const auto& layers = j.at("mlp").at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& lj = layers[i];
            DenseLayerT<float> l;
            l.w = matrix_from_json(lj.at("w"), l.out, l.in);
            l.b = lj.at("b").get<std::vector<float>>();
            if (l.b.size() != l.out) throw SchemaError("bias length does not match layer width");
            l.relu = lj.value("activation", std::string(i + 1 < layers.size() ? "relu" : "sigmoid")) == "relu";
            l.dropout = lj.value("dropout", false);
            if (!m.mlp.layers.empty() && m.mlp.layers.back().out != l.in) {
                throw SchemaError("MLP layer widths do not chain");
            }
            m.mlp.layers.push_back(std::move(l));
        }
        if (m.mlp.layers.empty() || m.mlp.layers.back().out != 1) {
            throw SchemaError("MLP must end in a single output unit");
        }
        if (meta.at("d").get<std::size_t>() != m.mlp.input_dim()) {
            throw SchemaError("meta.d does not match the MLP input width");
        }
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad model document: ") + e.what());
    }
}

LayerAudit audit_layers(const MlpParams& mlp) {
    LayerAudit a;
    if (mlp.layers.empty()) return a;
    a.widths.push_back(mlp.layers.front().in);
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        const auto& l = mlp.layers[i];
        a.widths.push_back(l.out);
        a.activations.push_back(l.relu ? "ReLU" : "Sigmoid");
        if (l.dropout) a.dropout_hidden.push_back(i + 1);
    }
    return a;
}

std::string audit_to_string(const LayerAudit& audit) {
    std::string s;
    for (std::size_t i = 0; i < audit.widths.size(); ++i) {
        if (i) s += "->";
        s += std::to_string(audit.widths[i]);
    }
    s += " dropout on hidden layers";
    for (std::size_t h : audit.dropout_hidden) s += " " + std::to_string(h);
    return s;
}

}  // namespace malflows
