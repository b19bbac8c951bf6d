#ifndef AIRTIME_TRAINING_HPP
#define AIRTIME_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "airtime/model.hpp"
#include "airtime/pose.hpp"

namespace airtime {

struct TrainConfig {
    int batch_size = 16;   // reference setting: 128
    double lr = 1e-3;      // reference setting: 1e-4
    int epochs = 60;       // reference setting: 200
    std::uint64_t seed = 0;
    int max_frames = 2048; // longer videos are rejected with a trim/augment hint
    std::string head = "crf"; // "crf" or "classification"

    void validate() const;
};

/// One training batch: dataset indices plus the padded per-member views.
/// Gold labels are padded with O; the mask flags the real frames.
struct Batch {
    std::vector<std::size_t> indices;
    std::size_t max_len = 0;
    std::vector<TagSequence> padded_tags;
    std::vector<std::vector<std::uint8_t>> mask;
};

/// Shuffle (seeded by config.seed and the epoch) and chunk the dataset.
std::vector<Batch> make_batches(const std::vector<VideoRecord>& records, const TrainConfig& config,
                                std::uint64_t epoch);

struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    int epoch = 0;
    std::vector<double> loss_history;
    std::vector<std::string> class_names; // classification label order, empty for the crf head
    std::vector<std::pair<std::string, nn::Tensor>> params;
};

/// Single-file binary container: magic "ATCP", version, config JSON, loss
/// history, then the named parameter tensors as little-endian doubles.
/// Round trips are bit-exact.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuild the model a checkpoint describes, with its saved parameters.
AirTimeModel model_from_checkpoint(const Checkpoint& ckpt);

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_history; // per-epoch mean per-frame NLL (crf) or per-video cross-entropy
    std::vector<double> val_accuracy; // per-epoch, percent; empty without a validation set
};

/// Called after each epoch with (epoch, training loss, validation accuracy
/// when a validation set is present). Lets callers keep logs that survive
/// a divergence abort.
using EpochCallback = std::function<void(int, double, std::optional<double>)>;

/// Train a fresh model. The crf head minimizes mean per-frame NLL, the
/// classification head mean cross-entropy over videos with labels taken
/// from the distinct record categories (sorted). With a validation set,
/// per-epoch accuracy (frame accuracy for crf, top-1 for classification)
/// is recorded with dropout off. Deterministic in (records, configs, seed);
/// a non-finite loss aborts with diagnostics.
TrainResult train(const std::vector<VideoRecord>& records, const ModelConfig& model_config, const TrainConfig& config,
                  const std::vector<VideoRecord>* validation = nullptr, const EpochCallback& on_epoch = {});

/// Same loop, but embedding + encoder parameters start from the checkpoint
/// while the head (and anything else) is freshly initialized. The epoch
/// counter and loss history restart.
TrainResult fine_tune(const Checkpoint& base, const std::vector<VideoRecord>& records, const TrainConfig& config,
                      const std::vector<VideoRecord>* validation = nullptr, const EpochCallback& on_epoch = {});

} // namespace airtime

#endif
