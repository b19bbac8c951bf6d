#include "airtime/model.hpp"

#include <algorithm>
#include <cmath>

#include "airtime/error.hpp"
#include "airtime/normalize.hpp"

namespace airtime {

void ModelConfig::validate() const {
    embedding.validate();
    encoder.validate();
    if (embedding_mode != "gcn" && embedding_mode != "fixed")
        throw ConfigError("embedding_mode must be \"gcn\" or \"fixed\", got \"" + embedding_mode + "\"");
    if (embedding_mode == "fixed" && embedding.provider_width != embedding.width)
        throw ConfigError("fixed embeddings are " + std::to_string(embedding.provider_width) +
                          " wide but the model width is " + std::to_string(embedding.width));
    if (encoder.width != embedding.width)
        throw ConfigError("encoder width " + std::to_string(encoder.width) + " does not match embedding width " +
                          std::to_string(embedding.width));
    if (num_classes < 0) throw ConfigError("num_classes must be non-negative");
}

nn::Var AirTimeModel::make_param(const std::string& name, std::size_t rows, std::size_t cols, std::uint64_t seed,
                                 double init_scale) {
    nn::Tensor t(rows, cols);
    if (init_scale > 0.0) {
        CounterRng rng = CounterRng::stream(seed, "init/" + name);
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(-init_scale, init_scale);
    }
    nn::Var v = nn::leaf(std::move(t), true);
    params_.push_back({name, v});
    return v;
}

nn::Var AirTimeModel::make_const_param(const std::string& name, std::size_t rows, std::size_t cols, double fill) {
    nn::Var v = nn::leaf(nn::Tensor(rows, cols, fill), true);
    params_.push_back({name, v});
    return v;
}

AirTimeModel::AirTimeModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    const std::size_t h = static_cast<std::size_t>(config_.embedding.width);

    if (config_.embedding_mode == "gcn") {
        const int layers = config_.embedding.gcn_layers;
        for (int l = 0; l < layers; ++l) {
            const std::size_t in = l == 0 ? 2 : static_cast<std::size_t>(config_.embedding.gcn_hidden);
            const std::size_t out = l + 1 == layers ? h : static_cast<std::size_t>(config_.embedding.gcn_hidden);
            const std::string base = "gcn." + std::to_string(l) + ".";
            GcnLayer layer;
            const double scale = 1.0 / std::sqrt(static_cast<double>(in));
            for (int p = 0; p < 3; ++p) layer.weight[static_cast<std::size_t>(p)] = make_param(base + "w" + std::to_string(p), in, out, seed, scale);
            layer.bias = make_const_param(base + "b", 1, out, 0.0);
            gcn_.push_back(std::move(layer));
        }
    }

    const double hs = 1.0 / std::sqrt(static_cast<double>(h));
    const std::size_t ffn = static_cast<std::size_t>(config_.encoder.ffn());
    for (int l = 0; l < config_.encoder.layers; ++l) {
        const std::string base = "enc." + std::to_string(l) + ".";
        EncoderLayerParams layer;
        layer.attn.wq = make_param(base + "attn.wq", h, h, seed, hs);
        layer.attn.bq = make_const_param(base + "attn.bq", 1, h, 0.0);
        layer.attn.wk = make_param(base + "attn.wk", h, h, seed, hs);
        layer.attn.bk = make_const_param(base + "attn.bk", 1, h, 0.0);
        layer.attn.wv = make_param(base + "attn.wv", h, h, seed, hs);
        layer.attn.bv = make_const_param(base + "attn.bv", 1, h, 0.0);
        layer.attn.wo = make_param(base + "attn.wo", h, h, seed, hs);
        layer.attn.bo = make_const_param(base + "attn.bo", 1, h, 0.0);
        layer.ln1_gain = make_const_param(base + "ln1.gain", 1, h, 1.0);
        layer.ln1_bias = make_const_param(base + "ln1.bias", 1, h, 0.0);
        layer.ffn_w1 = make_param(base + "ffn.w1", h, ffn, seed, hs);
        layer.ffn_b1 = make_const_param(base + "ffn.b1", 1, ffn, 0.0);
        layer.ffn_w2 = make_param(base + "ffn.w2", ffn, h, seed, 1.0 / std::sqrt(static_cast<double>(ffn)));
        layer.ffn_b2 = make_const_param(base + "ffn.b2", 1, h, 0.0);
        layer.ln2_gain = make_const_param(base + "ln2.gain", 1, h, 1.0);
        layer.ln2_bias = make_const_param(base + "ln2.bias", 1, h, 0.0);
        encoder_.layers.push_back(std::move(layer));
    }

    emit_w_ = make_param("emit.w", h, static_cast<std::size_t>(kNumTags), seed, hs);
    emit_b_ = make_const_param("emit.b", 1, static_cast<std::size_t>(kNumTags), 0.0);
    crf_a_ = make_param("crf.a", kCrfStates, kCrfStates, seed, 0.1);
    crf_apply_mask(crf_a_->value);

    if (config_.num_classes > 0) {
        cls_w_ = make_param("cls.w", h, static_cast<std::size_t>(config_.num_classes), seed, hs);
        cls_b_ = make_const_param("cls.b", 1, static_cast<std::size_t>(config_.num_classes), 0.0);
    }
}

std::vector<std::pair<std::string, nn::Tensor>> AirTimeModel::state() const {
    std::vector<std::pair<std::string, nn::Tensor>> out;
    out.reserve(params_.size());
    for (const nn::Parameter& p : params_) out.emplace_back(p.name, p.var->value);
    return out;
}

void AirTimeModel::load_parameter(const std::string& name, const nn::Tensor& value) {
    for (nn::Parameter& p : params_) {
        if (p.name != name) continue;
        if (!p.var->value.same_shape(value))
            throw CheckpointError("parameter '" + name + "' is " + std::to_string(value.rows()) + "x" +
                                  std::to_string(value.cols()) + " in the checkpoint, the model expects " +
                                  std::to_string(p.var->value.rows()) + "x" + std::to_string(p.var->value.cols()));
        p.var->value = value;
        if (name == "crf.a") crf_apply_mask(p.var->value);
        return;
    }
    throw CheckpointError("checkpoint parameter '" + name + "' does not exist in this model");
}

void AirTimeModel::clamp_transitions() {
    if (crf_a_->grad_ready) crf_mask_grad(crf_a_->grad);
    crf_apply_mask(crf_a_->value);
}

nn::Var AirTimeModel::encode(const std::vector<Pose>& frames, CounterRng* dropout_rng, std::size_t pad_to,
                             const nn::Tensor* table, std::size_t& real_len) {
    if (frames.empty()) throw DataError("empty pose sequence");
    real_len = frames.size();
    const std::size_t padded = std::max(pad_to, real_len);
    const std::size_t h = static_cast<std::size_t>(config_.embedding.width);

    nn::Var emb;
    if (config_.embedding_mode == "gcn") {
        std::vector<Pose> norm = normalize_pose(frames);
        norm.resize(padded); // zero poses in the padded tail
        SequencePartitions parts = build_sequence_partitions(norm);
        emb = gcn_forward(parts, nn::leaf(stack_joint_features(norm)), gcn_);
    } else {
        if (table == nullptr) throw DataError("fixed embedding mode needs an embedding table for the video");
        emb = fixed_embedding(*table, real_len, config_.embedding.width);
        if (padded > real_len) emb = nn::concat_rows({emb, nn::leaf(nn::Tensor(padded - real_len, h))});
    }

    nn::Var x = nn::add(emb, nn::leaf(positional_encoding(padded, config_.embedding.width)));
    x = dropout(x, config_.encoder.dropout, dropout_rng);

    std::vector<std::uint8_t> valid(padded, 1);
    for (std::size_t i = real_len; i < padded; ++i) valid[i] = 0;
    attention_.clear();
    return encoder_forward(x, valid, encoder_, config_.encoder, dropout_rng,
                           capture_attention_ ? &attention_ : nullptr);
}

nn::Var AirTimeModel::emissions(const std::vector<Pose>& frames, CounterRng* dropout_rng, std::size_t pad_to,
                                const nn::Tensor* table) {
    std::size_t real_len = 0;
    nn::Var enc = encode(frames, dropout_rng, pad_to, table, real_len);
    nn::Var c = nn::add_rowvec(nn::matmul(enc, emit_w_), emit_b_);
    if (enc->value.rows() > real_len) c = nn::block(c, 0, real_len, 0, static_cast<std::size_t>(kNumTags));
    return c;
}

nn::Var AirTimeModel::sequence_nll(const std::vector<Pose>& frames, const TagSequence& gold, CounterRng* dropout_rng,
                                   std::size_t pad_to, const nn::Tensor* table) {
    return crf_nll(emissions(frames, dropout_rng, pad_to, table), gold, crf_a_);
}

nn::Var AirTimeModel::class_logits(const std::vector<Pose>& frames, CounterRng* dropout_rng, std::size_t pad_to,
                                   const nn::Tensor* table) {
    if (config_.num_classes <= 0) throw UsageError("model has no classification head");
    std::size_t real_len = 0;
    nn::Var enc = encode(frames, dropout_rng, pad_to, table, real_len);
    nn::Var pooled = enc->value.rows() > real_len
                         ? nn::mean_rows(nn::block(enc, 0, real_len, 0, enc->value.cols()))
                         : nn::mean_rows(enc);
    return nn::add_rowvec(nn::matmul(pooled, cls_w_), cls_b_);
}

LabelPath AirTimeModel::predict(const std::vector<Pose>& frames, const nn::Tensor* table) {
    nn::Var c = emissions(frames, nullptr, 0, table);
    return viterbi_decode(c->value, crf_a_->value);
}

} // namespace airtime
