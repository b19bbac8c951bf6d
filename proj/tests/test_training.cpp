#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "airtime/error.hpp"
#include "airtime/synthetic.hpp"
#include "airtime/tags.hpp"
#include "airtime/training.hpp"

using namespace airtime;
using nn::Tensor;

namespace {

ModelConfig tiny_model() {
    ModelConfig cfg;
    cfg.embedding.width = 16;
    cfg.embedding.gcn_hidden = 8;
    cfg.embedding.gcn_layers = 1;
    cfg.encoder.width = 16;
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.ffn_width = 32;
    cfg.encoder.dropout = 0.0;
    return cfg;
}

SynthConfig short_videos() {
    SynthConfig cfg;
    cfg.num_videos = 10;
    cfg.min_frames = 36;
    cfg.max_frames = 48;
    cfg.min_flights = 1;
    cfg.max_flights = 1;
    cfg.min_flight_len = 8;
    cfg.max_flight_len = 12;
    cfg.context = 10;
    cfg.min_gap = 6;
    return cfg;
}

std::vector<VideoRecord> mixed_category_videos(int count, std::uint64_t seed) {
    SynthConfig cfg = short_videos();
    cfg.num_videos = count;
    cfg.max_flights = 2;
    cfg.min_frames = 48;
    cfg.max_frames = 64;
    return generate_synthetic(cfg, seed);
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/airtime_train_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_tensor(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a.at(i) != b.at(i)) return false;
    return true;
}

const Tensor* find_param(const Checkpoint& ckpt, const std::string& name) {
    for (const auto& [n, t] : ckpt.params)
        if (n == name) return &t;
    return nullptr;
}

} // namespace

TEST_CASE("batches cover the dataset in seeded chunks") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 41);
    REQUIRE(records.size() == 10);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.seed = 13;

    const std::vector<Batch> batches = make_batches(records, cfg, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].indices.size() == 4);
    CHECK(batches[1].indices.size() == 4);
    CHECK(batches[2].indices.size() == 2);
    std::set<std::size_t> seen;
    for (const Batch& b : batches) seen.insert(b.indices.begin(), b.indices.end());
    CHECK(seen.size() == 10);

    // Same seed and epoch reshuffle identically; a new epoch reshuffles.
    const std::vector<Batch> again = make_batches(records, cfg, 0);
    const std::vector<Batch> next = make_batches(records, cfg, 1);
    bool same_epoch_equal = true, next_epoch_equal = true;
    for (std::size_t i = 0; i < batches.size(); ++i) {
        same_epoch_equal &= batches[i].indices == again[i].indices;
        next_epoch_equal &= batches[i].indices == next[i].indices;
    }
    CHECK(same_epoch_equal);
    CHECK_FALSE(next_epoch_equal);

    // One batch holds everything when the batch size allows it.
    cfg.batch_size = 64;
    CHECK(make_batches(records, cfg, 0).size() == 1);
}

TEST_CASE("batch members are padded with O tags and masked to their length") {
    VideoRecord small;
    small.video_id = "small";
    small.fps = 30.0;
    small.frames.assign(20, Pose{});
    small.flights = {{5, 12}};
    VideoRecord big;
    big.video_id = "big";
    big.fps = 30.0;
    big.frames.assign(35, Pose{});
    big.flights = {{8, 14}, {22, 30}};

    TrainConfig cfg;
    cfg.batch_size = 2;
    const std::vector<Batch> batches = make_batches({small, big}, cfg, 0);
    REQUIRE(batches.size() == 1);
    const Batch& b = batches[0];
    CHECK(b.max_len == 35);
    for (std::size_t m = 0; m < b.indices.size(); ++m) {
        const VideoRecord& rec = b.indices[m] == 0 ? small : big;
        const TagSequence want = intervals_to_tags(rec.flights, rec.length());
        REQUIRE(b.padded_tags[m].size() == 35);
        REQUIRE(b.mask[m].size() == 35);
        for (std::size_t t = 0; t < 35; ++t) {
            if (t < rec.length()) {
                CHECK(b.padded_tags[m][t] == want[t]);
                CHECK(b.mask[m][t] == 1);
            } else {
                CHECK(b.padded_tags[m][t] == Tag::O);
                CHECK(b.mask[m][t] == 0);
            }
        }
    }
}

TEST_CASE("over-length videos are rejected with a trim hint") {
    std::vector<VideoRecord> records = generate_synthetic(short_videos(), 42);
    TrainConfig cfg;
    cfg.max_frames = 30; // every generated video is longer
    CHECK_THROWS_WITH_AS(make_batches(records, cfg, 0), doctest::Contains("trim"), DataError);
    CHECK_THROWS_WITH_AS(make_batches(records, cfg, 0), doctest::Contains("augmentation"), DataError);
}

TEST_CASE("train config rejects out-of-range fields") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.epochs = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.max_frames = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.head = "segmentation";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(train({}, tiny_model(), TrainConfig{}), DataError);
}

TEST_CASE("padding frames change neither the loss nor the gradients") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 43);
    AirTimeModel model(tiny_model(), 3);
    const VideoRecord& rec = records[0];
    const TagSequence gold = intervals_to_tags(rec.flights, rec.length());

    const nn::Var plain = model.sequence_nll(rec.frames, gold);
    nn::backward(plain);
    std::vector<Tensor> grads;
    for (nn::Parameter& p : model.parameters()) {
        REQUIRE(p.var->grad_ready);
        grads.push_back(p.var->grad);
        p.var->grad_ready = false;
    }

    const nn::Var padded = model.sequence_nll(rec.frames, gold, nullptr, rec.length() + 9);
    CHECK(std::abs(padded->value.at(0) - plain->value.at(0)) <= 1e-9);
    nn::backward(padded);
    std::size_t at = 0;
    for (nn::Parameter& p : model.parameters()) {
        for (std::size_t i = 0; i < p.var->grad.numel(); ++i)
            CHECK(std::abs(p.var->grad.at(i) - grads[at].at(i)) <= 1e-9);
        ++at;
    }
}

TEST_CASE("the first epoch loss is the per-frame NLL of the fresh model") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 44);
    TrainConfig cfg;
    cfg.batch_size = 16; // one batch: no optimizer step lands inside the epoch
    cfg.epochs = 1;
    cfg.seed = 17;
    const TrainResult run = train(records, tiny_model(), cfg);
    REQUIRE(run.loss_history.size() == 1);

    AirTimeModel fresh(tiny_model(), cfg.seed);
    double want = 0.0;
    for (const VideoRecord& rec : records) {
        const TagSequence gold = intervals_to_tags(rec.flights, rec.length());
        want += fresh.sequence_nll(rec.frames, gold)->value.at(0) / static_cast<double>(rec.length());
    }
    want /= static_cast<double>(records.size());
    CHECK(run.loss_history[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("training is deterministic in the seed") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 45);
    ModelConfig model_cfg = tiny_model();
    model_cfg.encoder.dropout = 0.1; // dropout streams must reproduce too
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    cfg.seed = 29;

    const TrainResult a = train(records, model_cfg, cfg);
    const TrainResult b = train(records, model_cfg, cfg);
    REQUIRE(a.loss_history.size() == 3);
    for (std::size_t e = 0; e < a.loss_history.size(); ++e) CHECK(a.loss_history[e] == b.loss_history[e]);
    REQUIRE(a.checkpoint.params.size() == b.checkpoint.params.size());
    for (std::size_t p = 0; p < a.checkpoint.params.size(); ++p) {
        CHECK(a.checkpoint.params[p].first == b.checkpoint.params[p].first);
        CHECK(same_tensor(a.checkpoint.params[p].second, b.checkpoint.params[p].second));
    }

    cfg.seed = 30;
    const TrainResult c = train(records, model_cfg, cfg);
    CHECK(a.loss_history[0] != c.loss_history[0]);
}

TEST_CASE("a zero learning rate leaves every parameter untouched") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 46);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.lr = 0.0;
    cfg.seed = 8;
    const TrainResult run = train(records, tiny_model(), cfg);

    AirTimeModel fresh(tiny_model(), cfg.seed);
    const auto init = fresh.state();
    REQUIRE(init.size() == run.checkpoint.params.size());
    for (std::size_t p = 0; p < init.size(); ++p) {
        CHECK(init[p].first == run.checkpoint.params[p].first);
        CHECK(same_tensor(init[p].second, run.checkpoint.params[p].second));
    }
}

TEST_CASE("validation accuracy is tracked per epoch") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 47);
    SynthConfig val_cfg = short_videos();
    val_cfg.num_videos = 3;
    const std::vector<VideoRecord> val = generate_synthetic(val_cfg, 48);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.seed = 5;

    std::vector<int> seen_epochs;
    const TrainResult run = train(records, tiny_model(), cfg, &val, [&](int epoch, double loss, std::optional<double> acc) {
        seen_epochs.push_back(epoch);
        CHECK(loss > 0.0);
        REQUIRE(acc.has_value());
        CHECK(*acc >= 0.0);
        CHECK(*acc <= 100.0);
    });
    CHECK(seen_epochs == std::vector<int>{0, 1});
    REQUIRE(run.val_accuracy.size() == 2);
    for (double a : run.val_accuracy) {
        CHECK(a >= 0.0);
        CHECK(a <= 100.0);
    }
}

TEST_CASE("a 10-video memorization run drives the per-frame NLL under 0.05") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 49);
    REQUIRE(records.size() == 10);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.epochs = 200;
    cfg.lr = 3e-3;
    cfg.seed = 11;
    const TrainResult run = train(records, tiny_model(), cfg);
    REQUIRE(run.loss_history.size() == 200);
    CHECK(run.loss_history.back() < 0.05);

    // The trend over 20-epoch windows keeps descending once warmed up.
    auto window = [&](std::size_t from) {
        double sum = 0.0;
        for (std::size_t e = from; e < from + 20; ++e) sum += run.loss_history[e];
        return sum / 20.0;
    };
    for (std::size_t from = 20; from + 40 <= 200; from += 20) CHECK(window(from + 20) <= window(from) + 0.01);
}

TEST_CASE("checkpoints round trip bit-exactly through disk") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 50);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.seed = 21;
    const TrainResult run = train(records, tiny_model(), cfg);

    TempFile file("roundtrip.ckpt");
    save_checkpoint(run.checkpoint, file.path);
    const Checkpoint loaded = load_checkpoint(file.path);

    CHECK(loaded.epoch == 2);
    CHECK(loaded.train.seed == 21);
    CHECK(loaded.train.batch_size == 4);
    CHECK(loaded.train.head == "crf");
    CHECK(loaded.model.embedding.width == 16);
    CHECK(loaded.model.encoder.heads == 2);
    CHECK(loaded.class_names.empty());
    REQUIRE(loaded.loss_history.size() == run.checkpoint.loss_history.size());
    for (std::size_t e = 0; e < loaded.loss_history.size(); ++e)
        CHECK(loaded.loss_history[e] == run.checkpoint.loss_history[e]);
    REQUIRE(loaded.params.size() == run.checkpoint.params.size());
    for (std::size_t p = 0; p < loaded.params.size(); ++p) {
        CHECK(loaded.params[p].first == run.checkpoint.params[p].first);
        CHECK(same_tensor(loaded.params[p].second, run.checkpoint.params[p].second));
    }

    // Forward outputs of the reloaded model match the in-memory ones.
    AirTimeModel from_memory = model_from_checkpoint(run.checkpoint);
    AirTimeModel from_disk = model_from_checkpoint(loaded);
    const nn::Var a = from_memory.emissions(records[0].frames);
    const nn::Var b = from_disk.emissions(records[0].frames);
    CHECK(same_tensor(a->value, b->value));
    CHECK(from_memory.predict(records[0].frames).tags == from_disk.predict(records[0].frames).tags);

    // Load then save writes the identical byte stream.
    TempFile copy("roundtrip2.ckpt");
    save_checkpoint(loaded, copy.path);
    CHECK(slurp(copy.path) == slurp(file.path));
}

TEST_CASE("corrupt checkpoint files fail loudly") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 51);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 1;
    const TrainResult run = train(records, tiny_model(), cfg);
    TempFile file("corrupt.ckpt");
    save_checkpoint(run.checkpoint, file.path);
    const std::string good = slurp(file.path);

    TempFile bad("corrupt2.ckpt");
    spit(bad.path, good.substr(0, 30));
    CHECK_THROWS_WITH_AS(load_checkpoint(bad.path), doctest::Contains("truncated"), CheckpointError);

    std::string wrong_magic = good;
    wrong_magic[0] = 'X';
    spit(bad.path, wrong_magic);
    CHECK_THROWS_WITH_AS(load_checkpoint(bad.path), doctest::Contains("magic"), CheckpointError);

    std::string wrong_version = good;
    wrong_version[4] = 99;
    spit(bad.path, wrong_version);
    CHECK_THROWS_WITH_AS(load_checkpoint(bad.path), doctest::Contains("version"), CheckpointError);

    spit(bad.path, good + "x");
    CHECK_THROWS_WITH_AS(load_checkpoint(bad.path), doctest::Contains("trailing"), CheckpointError);

    CHECK_THROWS_AS(load_checkpoint("/tmp/airtime_train_missing_file.ckpt"), CheckpointError);

    Checkpoint gutted = run.checkpoint;
    gutted.params.pop_back();
    CHECK_THROWS_WITH_AS(model_from_checkpoint(gutted), doctest::Contains("missing parameter"), CheckpointError);
}

TEST_CASE("fine-tuning keeps the encoder weights and restarts the head") {
    const std::vector<VideoRecord> detect = generate_synthetic(short_videos(), 52);
    TrainConfig base_cfg;
    base_cfg.batch_size = 4;
    base_cfg.epochs = 1;
    base_cfg.seed = 33;
    const Checkpoint base = train(detect, tiny_model(), base_cfg).checkpoint;

    const std::vector<VideoRecord> classed = mixed_category_videos(12, 53);
    std::set<std::string> cats;
    for (const VideoRecord& r : classed) cats.insert(r.category);
    REQUIRE(cats.size() >= 2);

    TrainConfig ft_cfg;
    ft_cfg.batch_size = 4;
    ft_cfg.epochs = 0; // keep the loaded weights observable
    ft_cfg.seed = 34;
    ft_cfg.head = "classification";
    const TrainResult ft = fine_tune(base, classed, ft_cfg);

    CHECK(ft.checkpoint.epoch == 0);
    CHECK(ft.checkpoint.loss_history.empty());
    CHECK(ft.checkpoint.class_names == std::vector<std::string>(cats.begin(), cats.end()));
    CHECK(ft.checkpoint.model.num_classes == static_cast<int>(cats.size()));

    bool has_cls = false, has_encoder = false;
    for (const auto& [name, tensor] : ft.checkpoint.params) {
        if (name.rfind("cls.", 0) == 0) has_cls = true;
        if (name.rfind("gcn.", 0) == 0 || name.rfind("enc.", 0) == 0) {
            has_encoder = true;
            const Tensor* from_base = find_param(base, name);
            REQUIRE(from_base != nullptr);
            CHECK(same_tensor(tensor, *from_base)); // copied, not re-drawn
        }
    }
    CHECK(has_cls);
    CHECK(has_encoder);
}

TEST_CASE("fine-tuning rejects incompatible checkpoints") {
    const std::vector<VideoRecord> detect = generate_synthetic(short_videos(), 54);
    TrainConfig base_cfg;
    base_cfg.batch_size = 8;
    base_cfg.epochs = 0;
    const Checkpoint base = train(detect, tiny_model(), base_cfg).checkpoint;
    const std::vector<VideoRecord> classed = mixed_category_videos(8, 55);

    TrainConfig ft_cfg;
    ft_cfg.epochs = 0;
    ft_cfg.head = "classification";

    Checkpoint wrong_shape = base;
    for (auto& [name, tensor] : wrong_shape.params)
        if (name == "enc.0.attn.wq") tensor = Tensor(3, 3);
    CHECK_THROWS_AS(fine_tune(wrong_shape, classed, ft_cfg), CheckpointError);

    Checkpoint dropped = base;
    dropped.params.erase(std::remove_if(dropped.params.begin(), dropped.params.end(),
                                        [](const auto& p) { return p.first == "enc.0.attn.wq"; }),
                         dropped.params.end());
    CHECK_THROWS_WITH_AS(fine_tune(dropped, classed, ft_cfg), doctest::Contains("enc.0.attn.wq"), CheckpointError);
}

TEST_CASE("classification training needs at least two categories") {
    const std::vector<VideoRecord> one_class = generate_synthetic(short_videos(), 56); // all f1s0
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.head = "classification";
    CHECK_THROWS_AS(train(one_class, tiny_model(), cfg), DataError);
}

TEST_CASE("classification training runs and logs cross-entropy") {
    const std::vector<VideoRecord> classed = mixed_category_videos(10, 57);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.seed = 3;
    cfg.head = "classification";
    const TrainResult run = train(classed, tiny_model(), cfg);
    REQUIRE(run.loss_history.size() == 2);
    for (double l : run.loss_history) CHECK(l > 0.0);
    CHECK(std::is_sorted(run.checkpoint.class_names.begin(), run.checkpoint.class_names.end()));
    CHECK(run.checkpoint.model.num_classes == static_cast<int>(run.checkpoint.class_names.size()));
}

TEST_CASE("a non-finite loss aborts with a divergence diagnosis") {
    const std::vector<VideoRecord> records = generate_synthetic(short_videos(), 58);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    cfg.lr = 1e200; // one step throws every weight to +-1e200
    CHECK_THROWS_WITH_AS(train(records, tiny_model(), cfg), doctest::Contains("diverged"), DataError);
}
