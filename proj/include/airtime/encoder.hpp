#ifndef AIRTIME_ENCODER_HPP
#define AIRTIME_ENCODER_HPP

#include <cstdint>
#include <vector>

#include "airtime/rng.hpp"
#include "airtime/tensor.hpp"

namespace airtime {

struct EncoderConfig {
    int width = 64;     // must match the frame embedding width
    int layers = 2;
    int heads = 4;
    int ffn_width = 0;  // 0 picks 4 * width
    double dropout = 0.1;

    int ffn() const { return ffn_width > 0 ? ffn_width : 4 * width; }
    void validate() const;
};

struct AttentionParams {
    nn::Var wq, bq, wk, bk, wv, bv, wo, bo;
};

struct EncoderLayerParams {
    AttentionParams attn;
    nn::Var ln1_gain, ln1_bias;
    nn::Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    nn::Var ln2_gain, ln2_bias;
};

struct EncoderParams {
    std::vector<EncoderLayerParams> layers;
};

/// Inverted dropout: zero each entry with probability `rate` and scale the
/// rest by 1/(1-rate). Identity when rate is 0 or rng is null (evaluation).
nn::Var dropout(const nn::Var& x, double rate, CounterRng* rng);

/// Post-norm Transformer encoder stack over x [T, width]. `valid` flags the
/// real frames; padded positions are masked out of every attention softmax
/// (keys scored -1e9), so valid-frame outputs do not depend on padding.
/// When attention_out is given, each layer's per-head post-softmax weights
/// [T, T] are appended to it (layer-major, head-minor).
nn::Var encoder_forward(const nn::Var& x, const std::vector<std::uint8_t>& valid, const EncoderParams& params,
                        const EncoderConfig& config, CounterRng* dropout_rng = nullptr,
                        std::vector<nn::Tensor>* attention_out = nullptr);

} // namespace airtime

#endif
