#ifndef AIRTIME_MODEL_HPP
#define AIRTIME_MODEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "airtime/adam.hpp"
#include "airtime/crf.hpp"
#include "airtime/embedding.hpp"
#include "airtime/encoder.hpp"
#include "airtime/pose.hpp"
#include "airtime/rng.hpp"
#include "airtime/tensor.hpp"

namespace airtime {

struct ModelConfig {
    EmbeddingConfig embedding;
    EncoderConfig encoder;
    std::string embedding_mode = "gcn"; // "gcn" (trainable) or "fixed" (external table)
    int num_classes = 0;                // adds the classification head when > 0

    void validate() const;
};

/// The full pipeline: pose normalization, frame embedding (graph conv or a
/// frozen external table), positional encoding, Transformer encoder, and
/// either the emission+CRF labeling head or the mean-pool classification
/// head. Owns all trainable parameters; every random draw during
/// construction comes from streams named by the parameter they fill.
class AirTimeModel {
public:
    AirTimeModel(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }

    /// All trainable parameters in checkpoint order.
    std::vector<nn::Parameter>& parameters() { return params_; }
    const std::vector<nn::Parameter>& parameters() const { return params_; }

    /// Copy of every parameter tensor, in order, for checkpointing.
    std::vector<std::pair<std::string, nn::Tensor>> state() const;
    /// Overwrite one named parameter. Throws CheckpointError on unknown
    /// name or shape mismatch.
    void load_parameter(const std::string& name, const nn::Tensor& value);

    nn::Var transitions() { return crf_a_; }
    /// Zero forbidden-transition gradients and re-pin their scores, called
    /// around each optimizer step.
    void clamp_transitions();

    /// Per-frame emission scores [T, 4] for the real frames. `pad_to`
    /// appends zero-pose padding frames (masked in the encoder) before the
    /// slice back to T; results must not depend on it. A fixed-mode model
    /// reads frame embeddings from `table` instead of running the GCN.
    nn::Var emissions(const std::vector<Pose>& frames, CounterRng* dropout_rng = nullptr, std::size_t pad_to = 0,
                      const nn::Tensor* table = nullptr);

    /// CRF negative log likelihood of the gold labels (not length-scaled).
    nn::Var sequence_nll(const std::vector<Pose>& frames, const TagSequence& gold, CounterRng* dropout_rng = nullptr,
                         std::size_t pad_to = 0, const nn::Tensor* table = nullptr);

    /// Classification head: mean-pool encoder outputs over the real frames,
    /// then an affine map to [1, num_classes].
    nn::Var class_logits(const std::vector<Pose>& frames, CounterRng* dropout_rng = nullptr, std::size_t pad_to = 0,
                         const nn::Tensor* table = nullptr);

    /// Viterbi decode with dropout off.
    LabelPath predict(const std::vector<Pose>& frames, const nn::Tensor* table = nullptr);

    /// Attention weights of the last emissions/class_logits call when
    /// capture was requested via set_capture_attention.
    void set_capture_attention(bool on) { capture_attention_ = on; }
    const std::vector<nn::Tensor>& captured_attention() const { return attention_; }

private:
    nn::Var encode(const std::vector<Pose>& frames, CounterRng* dropout_rng, std::size_t pad_to,
                   const nn::Tensor* table, std::size_t& real_len);
    nn::Var make_param(const std::string& name, std::size_t rows, std::size_t cols, std::uint64_t seed,
                       double init_scale); // uniform(-s, s) from stream "init/"+name
    nn::Var make_const_param(const std::string& name, std::size_t rows, std::size_t cols, double fill);

    ModelConfig config_;
    std::vector<GcnLayer> gcn_;
    EncoderParams encoder_;
    nn::Var emit_w_, emit_b_;
    nn::Var crf_a_;
    nn::Var cls_w_, cls_b_;
    std::vector<nn::Parameter> params_;
    bool capture_attention_ = false;
    std::vector<nn::Tensor> attention_;
};

} // namespace airtime

#endif
