#pragma once

#include "malflows/error.hpp"
#include "malflows/rng.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace malflows {

inline constexpr std::size_t kChannels = 3;         // CF, DF, ICC
inline constexpr std::size_t kAttentionHidden = 6;  // W0 is c x 6, W1 is 6 x c

class NoViewError : public Error {
public:
    using Error::Error;
};

/// c x d matrix of per-view vectors. A channel is masked exactly when it is
/// all zero (the app had no vector in that view).
template <class Real>
struct ChannelInputT {
    std::size_t channels = kChannels;
    std::size_t dim = 0;
    std::vector<Real> values;  // row-major, channels x dim
    std::vector<bool> mask;    // true = masked

    std::span<const Real> channel(std::size_t ch) const { return {values.data() + ch * dim, dim}; }

    // Absent views become zero channels.
    static ChannelInputT from_views(std::span<const std::optional<std::vector<float>>> views, std::size_t dim);
    static ChannelInputT from_matrix(std::size_t channels, std::size_t dim, std::vector<Real> values);
};

template <class Real>
struct AttentionParamsT {
    std::size_t channels = kChannels;
    std::vector<Real> w0;  // channels x 6, w0[ch * 6 + k]
    std::vector<Real> w1;  // 6 x channels, w1[k * channels + ch]
};

template <class Real>
struct AttentionOutput {
    std::vector<Real> weights;  // M_c, one per channel
    std::vector<Real> fused;    // y0, length d
};

// Pool each channel by mean + max, score it through W0/ReLU/W1, mask empty
// channels, softmax, and take the weighted sum of the channel vectors.
template <class Real>
AttentionOutput<Real> channel_attention(const ChannelInputT<Real>& x, const AttentionParamsT<Real>& a);

template <class Real>
struct DenseLayerT {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<Real> w;  // out x in
    std::vector<Real> b;  // out
    bool relu = true;     // false only for the sigmoid output layer
    bool dropout = false;
};

template <class Real>
struct MlpParamsT {
    std::vector<DenseLayerT<Real>> layers;
    Real dropout_rate = Real(0.5);

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
};

enum class FusionMode { Attention, Add };

template <class Real>
struct FusionModelT {
    FusionMode mode = FusionMode::Attention;
    AttentionParamsT<Real> attention;
    MlpParamsT<Real> mlp;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
};

using ChannelInput = ChannelInputT<float>;
using AttentionParams = AttentionParamsT<float>;
using MlpParams = MlpParamsT<float>;
using FusionModel = FusionModelT<float>;

// Input width plus the six layer widths, and which hidden layers (1-based)
// drop out.
inline const std::vector<std::size_t> kDefaultWidths{128, 256, 128, 64, 32, 16, 1};
inline const std::vector<std::size_t> kDefaultDropoutLayers{1, 3, 5};

template <class Real>
MlpParamsT<Real> make_mlp(std::span<const std::size_t> widths, std::span<const std::size_t> dropout_layers,
                          Real dropout_rate, Rng& rng);

template <class Real>
AttentionParamsT<Real> make_attention(std::size_t channels, Rng& rng);

template <class Real>
FusionModelT<Real> make_model(std::span<const std::size_t> widths, std::span<const std::size_t> dropout_layers,
                              Real dropout_rate, FusionMode mode, std::uint64_t seed);

// Probability of malware. With `dropout_rng` the hidden layers flagged for
// dropout use inverted dropout masks drawn from it (training mode); without it
// the forward pass is deterministic (evaluation mode).
template <class Real>
Real mlp_forward(std::span<const Real> y0, const MlpParamsT<Real>& m, Rng* dropout_rng = nullptr);

template <class Real>
Real predict(const FusionModelT<Real>& model, const ChannelInputT<Real>& x, Rng* dropout_rng = nullptr);

// Binary cross-entropy of the model on one sample, with the gradient for every
// parameter added into `grad` (which must have the model's shape).
template <class Real>
double loss_and_gradient(const FusionModelT<Real>& model, const ChannelInputT<Real>& x, int label,
                         FusionModelT<Real>& grad, Rng* dropout_rng = nullptr);

template <class Real>
FusionModelT<Real> zeros_like(const FusionModelT<Real>& model);

// Every trainable array, in a fixed order: W0, W1 (attention mode only), then
// weights and biases of each layer.
template <class Real>
std::vector<std::span<Real>> parameter_spans(FusionModelT<Real>& model);

struct Sample {
    std::string app_id;
    ChannelInput input;
    std::optional<int> label;
    std::optional<std::string> period;
};

struct TrainParams {
    std::size_t epochs = 100;
    std::size_t batch = 128;
    double learning_rate = 0.001;
    double dropout = 0.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    FusionMode mode = FusionMode::Attention;
    std::vector<std::size_t> widths = kDefaultWidths;
    std::vector<std::size_t> dropout_layers = kDefaultDropoutLayers;
};

struct TrainResult {
    FusionModel model;
    std::vector<double> loss_curve;  // mean loss per epoch
};

TrainResult train_classifier(std::span<const Sample> dataset, const TrainParams& params, std::uint64_t seed);

std::vector<double> predict_scores(const FusionModel& model, std::span<const Sample> dataset);

std::string model_to_json(const FusionModel& model);
FusionModel model_from_json(std::string_view text);

struct LayerAudit {
    std::vector<std::size_t> widths;          // input width, then each layer's output width
    std::vector<std::size_t> dropout_hidden;  // 1-based hidden layer numbers
    std::vector<std::string> activations;
};

LayerAudit audit_layers(const MlpParams& mlp);
std::string audit_to_string(const LayerAudit& audit);

std::string_view to_string(FusionMode m);
std::optional<FusionMode> parse_fusion_mode(std::string_view s);

}  // namespace malflows
