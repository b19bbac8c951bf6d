#include "airtime/encoder.hpp"

#include <cmath>
#include <string>

#include "airtime/error.hpp"

namespace airtime {

void EncoderConfig::validate() const {
    if (width <= 0) throw ConfigError("encoder: width must be positive");
    if (layers < 1) throw ConfigError("encoder: layers must be at least 1");
    if (heads < 1) throw ConfigError("encoder: heads must be at least 1");
    if (width % heads != 0)
        throw ConfigError("encoder: width " + std::to_string(width) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    if (ffn_width < 0) throw ConfigError("encoder: ffn_width must be non-negative");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder: dropout must be in [0,1)");
}

nn::Var dropout(const nn::Var& x, double rate, CounterRng* rng) {
    if (rate <= 0.0 || rng == nullptr) return x;
    nn::Tensor mask(x->value.rows(), x->value.cols());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < mask.numel(); ++i) mask.at(i) = rng->uniform() < rate ? 0.0 : keep_scale;
    return nn::mul(x, nn::leaf(std::move(mask)));
}

namespace {

nn::Var attention(const nn::Var& h, const nn::Var& key_penalty, const AttentionParams& p, const EncoderConfig& config,
                  CounterRng* rng, std::vector<nn::Tensor>* attention_out) {
    const std::size_t t = h->value.rows();
    const std::size_t dk = static_cast<std::size_t>(config.width / config.heads);

    nn::Var q = nn::add_rowvec(nn::matmul(h, p.wq), p.bq);
    nn::Var k = nn::add_rowvec(nn::matmul(h, p.wk), p.bk);
    nn::Var v = nn::add_rowvec(nn::matmul(h, p.wv), p.bv);

    std::vector<nn::Var> heads;
    heads.reserve(static_cast<std::size_t>(config.heads));
    for (int i = 0; i < config.heads; ++i) {
        const std::size_t c0 = static_cast<std::size_t>(i) * dk;
        nn::Var qh = nn::block(q, 0, t, c0, dk);
        nn::Var kh = nn::block(k, 0, t, c0, dk);
        nn::Var vh = nn::block(v, 0, t, c0, dk);
        nn::Var scores = nn::affine(nn::matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(dk)), 0.0);
        if (key_penalty) scores = nn::add_rowvec(scores, key_penalty);
        nn::Var weights = nn::softmax_rows(scores);
        if (attention_out) attention_out->push_back(weights->value);
        heads.push_back(nn::matmul(dropout(weights, config.dropout, rng), vh));
    }
    return nn::add_rowvec(nn::matmul(nn::concat_cols(heads), p.wo), p.bo);
}

} // namespace

nn::Var encoder_forward(const nn::Var& x, const std::vector<std::uint8_t>& valid, const EncoderParams& params,
                        const EncoderConfig& config, CounterRng* dropout_rng,
                        std::vector<nn::Tensor>* attention_out) {
    config.validate();
    const std::size_t t = x->value.rows();
    if (x->value.cols() != static_cast<std::size_t>(config.width))
        throw ShapeError("encoder: input width " + std::to_string(x->value.cols()) + ", configured " +
                         std::to_string(config.width));
    if (valid.size() != t)
        throw ShapeError("encoder: mask length " + std::to_string(valid.size()) + " for " + std::to_string(t) +
                         " frames");
    if (params.layers.size() != static_cast<std::size_t>(config.layers))
        throw ShapeError("encoder: got parameters for " + std::to_string(params.layers.size()) + " layers, configured " +
                         std::to_string(config.layers));

    nn::Var key_penalty; // [1, T] additive scores; -1e9 kills padded keys
    bool any_padding = false;
    for (std::uint8_t f : valid) any_padding |= (f == 0);
    if (any_padding) {
        nn::Tensor pen(1, t);
        for (std::size_t i = 0; i < t; ++i) pen(0, i) = valid[i] ? 0.0 : -1e9;
        key_penalty = nn::leaf(std::move(pen));
    }

    nn::Var h = x;
    for (const EncoderLayerParams& layer : params.layers) {
        nn::Var att = attention(h, key_penalty, layer.attn, config, dropout_rng, attention_out);
        h = nn::layer_norm_rows(nn::add(h, dropout(att, config.dropout, dropout_rng)), layer.ln1_gain, layer.ln1_bias);
        nn::Var f = nn::add_rowvec(nn::matmul(h, layer.ffn_w1), layer.ffn_b1);
        f = nn::add_rowvec(nn::matmul(nn::relu(f), layer.ffn_w2), layer.ffn_b2);
        h = nn::layer_norm_rows(nn::add(h, dropout(f, config.dropout, dropout_rng)), layer.ln2_gain, layer.ln2_bias);
    }
    return h;
}

} // namespace airtime
