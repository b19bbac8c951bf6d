#include "airtime/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "airtime/error.hpp"
#include "airtime/metrics.hpp"
#include "airtime/tags.hpp"

namespace airtime {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (lr < 0.0) throw ConfigError("train: learning rate must be non-negative");
    if (epochs < 0) throw ConfigError("train: epochs must be non-negative");
    if (max_frames < 1) throw ConfigError("train: max_frames must be positive");
    if (head != "crf" && head != "classification")
        throw ConfigError("train: head must be \"crf\" or \"classification\", got \"" + head + "\"");
}

std::vector<Batch> make_batches(const std::vector<VideoRecord>& records, const TrainConfig& config,
                                std::uint64_t epoch) {
    for (const VideoRecord& r : records) {
        if (r.length() > static_cast<std::size_t>(config.max_frames))
            throw DataError("video '" + r.video_id + "' has " + std::to_string(r.length()) +
                            " frames, over the max_frames limit of " + std::to_string(config.max_frames) +
                            "; trim it or cut context with augmentation");
    }

    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    CounterRng rng = CounterRng::stream(config.seed, "shuffle/" + std::to_string(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
    }

    std::vector<Batch> batches;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch_size)) {
        Batch b;
        const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
        b.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(at), order.begin() + static_cast<std::ptrdiff_t>(end));
        for (std::size_t idx : b.indices) b.max_len = std::max(b.max_len, records[idx].length());
        for (std::size_t idx : b.indices) {
            const VideoRecord& r = records[idx];
            TagSequence tags = intervals_to_tags(r.flights, r.length());
            tags.resize(b.max_len, Tag::O);
            b.padded_tags.push_back(std::move(tags));
            std::vector<std::uint8_t> m(b.max_len, 0);
            std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(r.length()), 1);
            b.mask.push_back(std::move(m));
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

namespace {

std::vector<std::string> distinct_categories(const std::vector<VideoRecord>& records) {
    std::set<std::string> cats;
    for (const VideoRecord& r : records) cats.insert(r.category);
    return {cats.begin(), cats.end()};
}

std::map<std::string, std::size_t> label_index(const std::vector<std::string>& class_names) {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < class_names.size(); ++i) m[class_names[i]] = i;
    return m;
}

std::size_t label_of(const VideoRecord& rec, const std::map<std::string, std::size_t>& labels) {
    auto it = labels.find(rec.category);
    if (it == labels.end())
        throw DataError("video '" + rec.video_id + "' has category \"" + rec.category +
                        "\" which is not among the training classes");
    return it->second;
}

nn::Var cross_entropy(const nn::Var& logits, std::size_t label) {
    return nn::sub(nn::logsumexp_rows(logits), nn::select_sum(logits, {{0, label}}));
}

std::size_t argmax_row(const nn::Tensor& t) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < t.cols(); ++c)
        if (t(0, c) > t(0, best)) best = c;
    return best;
}

double validation_accuracy(AirTimeModel& model, const std::vector<VideoRecord>& val, bool classify,
                           const std::map<std::string, std::size_t>& labels) {
    if (val.empty()) throw DataError("validation set is empty");
    if (classify) {
        std::size_t hit = 0;
        for (const VideoRecord& r : val) hit += argmax_row(model.class_logits(r.frames)->value) == label_of(r, labels);
        return 100.0 * static_cast<double>(hit) / static_cast<double>(val.size());
    }
    std::vector<TagSequence> golds, preds;
    golds.reserve(val.size());
    preds.reserve(val.size());
    for (const VideoRecord& r : val) {
        golds.push_back(intervals_to_tags(r.flights, r.length()));
        preds.push_back(model.predict(r.frames).tags);
    }
    return frame_accuracy(golds, preds);
}

TrainResult run_training(AirTimeModel& model, const std::vector<VideoRecord>& records, const TrainConfig& config,
                         std::vector<std::string> class_names, const std::vector<VideoRecord>* validation,
                         const EpochCallback& on_epoch) {
    const bool classify = config.head == "classification";
    const std::map<std::string, std::size_t> labels = label_index(class_names);

    std::vector<nn::Parameter> trainable;
    for (const nn::Parameter& p : model.parameters()) {
        const bool head_param = p.name.rfind("cls.", 0) == 0;
        const bool crf_param = p.name.rfind("emit.", 0) == 0 || p.name == "crf.a";
        if (classify ? !crf_param : !head_param) trainable.push_back(p);
    }

    nn::AdamConfig adam_config;
    adam_config.lr = config.lr;
    nn::Adam adam(adam_config);

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss_sum = 0.0;
        for (const Batch& batch : make_batches(records, config, static_cast<std::uint64_t>(epoch))) {
            adam.zero_grad(trainable);
            const double inv_b = 1.0 / static_cast<double>(batch.indices.size());
            double batch_loss = 0.0;
            for (std::size_t idx : batch.indices) {
                const VideoRecord& rec = records[idx];
                CounterRng drop = CounterRng::stream(
                    config.seed, "dropout/" + std::to_string(epoch) + "/" + std::to_string(idx));
                CounterRng* drop_rng = model.config().encoder.dropout > 0.0 ? &drop : nullptr;
                nn::Var loss;
                if (classify) {
                    loss = cross_entropy(model.class_logits(rec.frames, drop_rng), label_of(rec, labels));
                } else {
                    const TagSequence gold = intervals_to_tags(rec.flights, rec.length());
                    loss = nn::affine(model.sequence_nll(rec.frames, gold, drop_rng),
                                      1.0 / static_cast<double>(rec.length()), 0.0);
                }
                batch_loss += loss->value.at(0) * inv_b;
                nn::backward(nn::affine(loss, inv_b, 0.0));
            }
            if (!std::isfinite(batch_loss))
                throw DataError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                " (seed " + std::to_string(config.seed) + ", lr " + std::to_string(config.lr) + ")");
            model.clamp_transitions();
            adam.step(trainable);
            model.clamp_transitions();
            epoch_loss_sum += batch_loss * static_cast<double>(batch.indices.size());
        }
        result.loss_history.push_back(epoch_loss_sum / static_cast<double>(records.size()));
        std::optional<double> val;
        if (validation != nullptr) {
            val = validation_accuracy(model, *validation, classify, labels);
            result.val_accuracy.push_back(*val);
        }
        if (on_epoch) on_epoch(epoch, result.loss_history.back(), val);
    }

    result.checkpoint.model = model.config();
    result.checkpoint.train = config;
    result.checkpoint.epoch = config.epochs;
    result.checkpoint.loss_history = result.loss_history;
    result.checkpoint.class_names = std::move(class_names);
    result.checkpoint.params = model.state();
    return result;
}

} // namespace

TrainResult train(const std::vector<VideoRecord>& records, const ModelConfig& model_config, const TrainConfig& config,
                  const std::vector<VideoRecord>* validation, const EpochCallback& on_epoch) {
    config.validate();
    if (records.empty()) throw DataError("training needs a non-empty dataset");
    ModelConfig cfg = model_config;
    std::vector<std::string> class_names;
    if (config.head == "classification") {
        class_names = distinct_categories(records);
        if (class_names.size() < 2) throw DataError("classification training needs at least 2 distinct categories");
        cfg.num_classes = static_cast<int>(class_names.size());
    }
    cfg.validate();
    AirTimeModel model(cfg, config.seed);
    return run_training(model, records, config, std::move(class_names), validation, on_epoch);
}

TrainResult fine_tune(const Checkpoint& base, const std::vector<VideoRecord>& records, const TrainConfig& config,
                      const std::vector<VideoRecord>* validation, const EpochCallback& on_epoch) {
    config.validate();
    if (records.empty()) throw DataError("fine-tuning needs a non-empty dataset");
    ModelConfig cfg = base.model;
    std::vector<std::string> class_names;
    if (config.head == "classification") {
        class_names = distinct_categories(records);
        if (class_names.size() < 2) throw DataError("classification training needs at least 2 distinct categories");
        cfg.num_classes = static_cast<int>(class_names.size());
    } else {
        cfg.num_classes = 0;
    }
    cfg.validate();
    AirTimeModel model(cfg, config.seed);

    std::map<std::string, const nn::Tensor*> saved;
    for (const auto& [name, tensor] : base.params) saved[name] = &tensor;
    for (const nn::Parameter& p : model.parameters()) {
        if (p.name.rfind("gcn.", 0) != 0 && p.name.rfind("enc.", 0) != 0) continue;
        auto it = saved.find(p.name);
        if (it == saved.end()) throw CheckpointError("checkpoint does not contain parameter '" + p.name + "'");
        model.load_parameter(p.name, *it->second);
    }
    return run_training(model, records, config, std::move(class_names), validation, on_epoch);
}

AirTimeModel model_from_checkpoint(const Checkpoint& ckpt) {
    AirTimeModel model(ckpt.model, ckpt.train.seed);
    std::set<std::string> loaded;
    for (const auto& [name, tensor] : ckpt.params) {
        model.load_parameter(name, tensor);
        loaded.insert(name);
    }
    for (const nn::Parameter& p : model.parameters())
        if (loaded.find(p.name) == loaded.end())
            throw CheckpointError("checkpoint is missing parameter '" + p.name + "'");
    return model;
}

namespace {

constexpr char kMagic[4] = {'A', 'T', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 8);
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

void get_bytes(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) throw CheckpointError("truncated checkpoint file");
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    get_bytes(in, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    get_bytes(in, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

json embedding_json(const EmbeddingConfig& c) {
    return {{"width", c.width}, {"gcn_hidden", c.gcn_hidden}, {"gcn_layers", c.gcn_layers},
            {"provider_width", c.provider_width}};
}

json encoder_json(const EncoderConfig& c) {
    return {{"width", c.width}, {"layers", c.layers}, {"heads", c.heads}, {"ffn_width", c.ffn_width},
            {"dropout", c.dropout}};
}

json meta_json(const Checkpoint& ckpt) {
    json j;
    j["model"] = {{"embedding", embedding_json(ckpt.model.embedding)},
                  {"encoder", encoder_json(ckpt.model.encoder)},
                  {"embedding_mode", ckpt.model.embedding_mode},
                  {"num_classes", ckpt.model.num_classes}};
    j["train"] = {{"batch_size", ckpt.train.batch_size}, {"lr", ckpt.train.lr},     {"epochs", ckpt.train.epochs},
                  {"seed", ckpt.train.seed},             {"max_frames", ckpt.train.max_frames},
                  {"head", ckpt.train.head}};
    j["epoch"] = ckpt.epoch;
    j["class_names"] = ckpt.class_names;
    return j;
}

void parse_meta(const std::string& text, Checkpoint& ckpt) {
    json j;
    try {
        j = json::parse(text);
        const json& m = j.at("model");
        const json& e = m.at("embedding");
        ckpt.model.embedding.width = e.at("width").get<int>();
        ckpt.model.embedding.gcn_hidden = e.at("gcn_hidden").get<int>();
        ckpt.model.embedding.gcn_layers = e.at("gcn_layers").get<int>();
        ckpt.model.embedding.provider_width = e.at("provider_width").get<int>();
        const json& n = m.at("encoder");
        ckpt.model.encoder.width = n.at("width").get<int>();
        ckpt.model.encoder.layers = n.at("layers").get<int>();
        ckpt.model.encoder.heads = n.at("heads").get<int>();
        ckpt.model.encoder.ffn_width = n.at("ffn_width").get<int>();
        ckpt.model.encoder.dropout = n.at("dropout").get<double>();
        ckpt.model.embedding_mode = m.at("embedding_mode").get<std::string>();
        ckpt.model.num_classes = m.at("num_classes").get<int>();
        const json& t = j.at("train");
        ckpt.train.batch_size = t.at("batch_size").get<int>();
        ckpt.train.lr = t.at("lr").get<double>();
        ckpt.train.epochs = t.at("epochs").get<int>();
        ckpt.train.seed = t.at("seed").get<std::uint64_t>();
        ckpt.train.max_frames = t.at("max_frames").get<int>();
        ckpt.train.head = t.at("head").get<std::string>();
        ckpt.epoch = j.at("epoch").get<int>();
        ckpt.class_names = j.at("class_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint metadata: ") + e.what());
    }
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open checkpoint file for writing: " + path);
    put_bytes(out, kMagic, 4);
    put_u32(out, kVersion);
    const std::string meta = meta_json(ckpt).dump();
    put_u64(out, meta.size());
    put_bytes(out, meta.data(), meta.size());
    put_u64(out, ckpt.loss_history.size());
    for (double v : ckpt.loss_history) put_f64(out, v);
    put_u32(out, static_cast<std::uint32_t>(ckpt.params.size()));
    for (const auto& [name, tensor] : ckpt.params) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        put_bytes(out, name.data(), name.size());
        put_u64(out, tensor.rows());
        put_u64(out, tensor.cols());
        for (std::size_t i = 0; i < tensor.numel(); ++i) put_f64(out, tensor.at(i));
    }
    out.flush();
    if (!out) throw CheckpointError("failed writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint file: " + path);
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::string(magic, 4) != std::string(kMagic, 4))
        throw CheckpointError("not a checkpoint file (bad magic): " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                              std::to_string(kVersion) + ")");
    Checkpoint ckpt;
    const std::uint64_t meta_len = get_u64(in);
    std::string meta(meta_len, '\0');
    get_bytes(in, meta.data(), meta_len);
    parse_meta(meta, ckpt);
    const std::uint64_t n_loss = get_u64(in);
    ckpt.loss_history.resize(n_loss);
    for (double& v : ckpt.loss_history) v = get_f64(in);
    const std::uint32_t n_params = get_u32(in);
    ckpt.params.reserve(n_params);
    for (std::uint32_t p = 0; p < n_params; ++p) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        get_bytes(in, name.data(), name_len);
        const std::uint64_t rows = get_u64(in);
        const std::uint64_t cols = get_u64(in);
        nn::Tensor t(rows, cols);
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = get_f64(in);
        ckpt.params.emplace_back(std::move(name), std::move(t));
    }
    in.peek();
    if (!in.eof()) throw CheckpointError("trailing data after checkpoint payload: " + path);
    return ckpt;
}

} // namespace airtime
