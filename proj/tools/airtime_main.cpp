// Command-line surface of the air-time pipeline: dataset generation and
// ingestion, training, fine-tuning, evaluation, prediction, and dataset
// statistics. One binary, one --seed, deterministic artifacts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "airtime/error.hpp"
#include "airtime/metrics.hpp"
#include "airtime/model.hpp"
#include "airtime/pose_io.hpp"
#include "airtime/synthetic.hpp"
#include "airtime/tags.hpp"
#include "airtime/tracking.hpp"
#include "airtime/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace airtime;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Key=value settings for one subcommand: declared keys with defaults,
/// overlaid by a config file and then by --set flags. Unknown keys are
/// rejected, and the full effective map is echoed into output artifacts.
class Settings {
public:
    void declare(const std::string& key, const std::string& default_value) { values_[key] = default_value; }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            const std::size_t a = line.find_first_not_of(" \t\r");
            if (a == std::string::npos) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
            set_checked(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), path + ":" + std::to_string(line_no));
        }
    }

    void apply_overrides(const std::vector<std::string>& overrides) {
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set needs key=value, got \"" + kv + "\"");
            set_checked(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), "--set");
        }
    }

    const std::string& get(const std::string& key) const { return values_.at(key); }

    int get_int(const std::string& key) const {
        try {
            std::size_t used = 0;
            const int v = std::stoi(get(key), &used);
            if (used != get(key).size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' is not an integer: \"" + get(key) + "\"");
        }
    }

    double get_double(const std::string& key) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(get(key), &used);
            if (used != get(key).size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' is not a number: \"" + get(key) + "\"");
        }
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : values_) j[k] = v;
        return j;
    }

private:
    static std::string trim(const std::string& s) {
        const std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    void set_checked(const std::string& key, const std::string& value, const std::string& where) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            std::string known;
            for (const auto& [k, v] : values_) known += (known.empty() ? "" : ", ") + k;
            throw ConfigError(where + ": unknown config key '" + key + "' (known: " + known + ")");
        }
        it->second = value;
    }

    std::map<std::string, std::string> values_;
};

void declare_synth_keys(Settings& s) {
    const SynthConfig d;
    s.declare("videos", std::to_string(d.num_videos));
    s.declare("fps", std::to_string(d.fps));
    s.declare("min_frames", std::to_string(d.min_frames));
    s.declare("max_frames", std::to_string(d.max_frames));
    s.declare("min_flights", std::to_string(d.min_flights));
    s.declare("max_flights", std::to_string(d.max_flights));
    s.declare("min_flight_len", std::to_string(d.min_flight_len));
    s.declare("max_flight_len", std::to_string(d.max_flight_len));
    s.declare("context", std::to_string(d.context));
    s.declare("min_gap", std::to_string(d.min_gap));
    s.declare("jump_height_min", std::to_string(d.jump_height_min));
    s.declare("jump_height_max", std::to_string(d.jump_height_max));
    s.declare("noise_sigma", std::to_string(d.noise_sigma));
    s.declare("speed_buckets", std::to_string(d.speed_buckets));
    s.declare("distractor_prob", std::to_string(d.distractor_prob));
}

SynthConfig synth_config_from(const Settings& s) {
    SynthConfig c;
    c.num_videos = s.get_int("videos");
    c.fps = s.get_double("fps");
    c.min_frames = s.get_int("min_frames");
    c.max_frames = s.get_int("max_frames");
    c.min_flights = s.get_int("min_flights");
    c.max_flights = s.get_int("max_flights");
    c.min_flight_len = s.get_int("min_flight_len");
    c.max_flight_len = s.get_int("max_flight_len");
    c.context = s.get_int("context");
    c.min_gap = s.get_int("min_gap");
    c.jump_height_min = s.get_double("jump_height_min");
    c.jump_height_max = s.get_double("jump_height_max");
    c.noise_sigma = s.get_double("noise_sigma");
    c.speed_buckets = s.get_int("speed_buckets");
    c.distractor_prob = s.get_double("distractor_prob");
    return c;
}

void declare_model_keys(Settings& s) {
    const ModelConfig d;
    s.declare("width", std::to_string(d.embedding.width));
    s.declare("gcn_hidden", std::to_string(d.embedding.gcn_hidden));
    s.declare("gcn_layers", std::to_string(d.embedding.gcn_layers));
    s.declare("provider_width", std::to_string(d.embedding.provider_width));
    s.declare("embedding_mode", d.embedding_mode);
    s.declare("encoder_layers", std::to_string(d.encoder.layers));
    s.declare("heads", std::to_string(d.encoder.heads));
    s.declare("ffn_width", std::to_string(d.encoder.ffn_width));
    s.declare("dropout", std::to_string(d.encoder.dropout));
}

ModelConfig model_config_from(const Settings& s) {
    ModelConfig c;
    c.embedding.width = s.get_int("width");
    c.embedding.gcn_hidden = s.get_int("gcn_hidden");
    c.embedding.gcn_layers = s.get_int("gcn_layers");
    c.embedding.provider_width = s.get_int("provider_width");
    c.embedding_mode = s.get("embedding_mode");
    c.encoder.width = c.embedding.width;
    c.encoder.layers = s.get_int("encoder_layers");
    c.encoder.heads = s.get_int("heads");
    c.encoder.ffn_width = s.get_int("ffn_width");
    c.encoder.dropout = s.get_double("dropout");
    return c;
}

void declare_train_keys(Settings& s, const std::string& default_head) {
    const TrainConfig d;
    s.declare("batch_size", std::to_string(d.batch_size));
    s.declare("lr", std::to_string(d.lr));
    s.declare("epochs", std::to_string(d.epochs));
    s.declare("max_frames", std::to_string(d.max_frames));
    s.declare("head", default_head);
}

TrainConfig train_config_from(const Settings& s, std::uint64_t seed) {
    TrainConfig c;
    c.batch_size = s.get_int("batch_size");
    c.lr = s.get_double("lr");
    c.epochs = s.get_int("epochs");
    c.max_frames = s.get_int("max_frames");
    c.head = s.get("head");
    c.seed = seed;
    return c;
}

void write_meta(const std::string& artifact_path, const std::string& command, std::uint64_t seed,
                const Settings& settings, const json& extra = json::object()) {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = settings.to_json();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(artifact_path + ".meta.json");
    if (!out) throw DataError("cannot write metadata file: " + artifact_path + ".meta.json");
    out << j.dump(2) << '\n';
}

struct CategoryStats {
    int videos = 0;
    int jumps = 0;
    std::int64_t frames = 0;
};

void print_dataset_stats(const std::vector<VideoRecord>& records, std::ostream& out) {
    std::map<std::string, CategoryStats> by_cat;
    int multi = 0;
    for (const VideoRecord& r : records) {
        CategoryStats& c = by_cat[r.category];
        ++c.videos;
        c.jumps += static_cast<int>(r.flights.size());
        c.frames += static_cast<std::int64_t>(r.length());
        multi += r.flights.size() >= 2;
    }
    auto line = [&](const std::string& cat, const CategoryStats& c) {
        std::ostringstream avg;
        avg.setf(std::ios::fixed);
        avg.precision(1);
        avg << (c.videos ? static_cast<double>(c.frames) / c.videos : 0.0);
        out << "  ";
        out << cat;
        for (std::size_t i = cat.size(); i < 12; ++i) out << ' ';
        std::string v = std::to_string(c.videos), j = std::to_string(c.jumps);
        out << v;
        for (std::size_t i = v.size(); i < 8; ++i) out << ' ';
        out << j;
        for (std::size_t i = j.size(); i < 8; ++i) out << ' ';
        out << avg.str() << '\n';
    };
    out << "  category    videos  jumps   avg frames\n";
    CategoryStats total;
    for (const auto& [cat, c] : by_cat) {
        line(cat, c);
        total.videos += c.videos;
        total.jumps += c.jumps;
        total.frames += c.frames;
    }
    line("total", total);
    out << "  videos with >=2 jumps: " << multi << '\n';
}

// ---------------------------------------------------------------- synth --

int cmd_synth(const std::string& out_path, std::uint64_t seed, const Settings& settings) {
    const SynthConfig config = synth_config_from(settings);
    const std::vector<VideoRecord> records = generate_synthetic(config, seed);
    save_dataset(records, out_path);
    write_meta(out_path, "synth", seed, settings);
    std::cout << "wrote " << records.size() << " videos to " << out_path << '\n';
    print_dataset_stats(records, std::cout);
    return 0;
}

// --------------------------------------------------------------- ingest --

int cmd_ingest(const std::string& poses_dir, const std::string& annotations_path, const std::string& out_path,
               std::uint64_t seed, const Settings& settings) {
    std::ifstream in(annotations_path);
    if (!in) throw DataError("cannot open annotations file: " + annotations_path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotations: ") + e.what());
    }
    if (!root.is_array()) throw SchemaError("annotations: top level must be an array of videos");

    std::vector<VideoRecord> records;
    int failures = 0;
    for (std::size_t i = 0; i < root.size(); ++i) {
        const json& entry = root[i];
        std::string video_id = "entry " + std::to_string(i);
        try {
            if (!entry.is_object()) throw SchemaError("annotation entry is not an object");
            for (const char* key : {"video_id", "file", "fps", "flights"})
                if (!entry.contains(key)) throw SchemaError("annotation entry needs \"" + std::string(key) + "\"");
            video_id = entry["video_id"].get<std::string>();
            VideoRecord rec;
            rec.video_id = video_id;
            rec.category = entry.value("category", std::string("unknown"));
            rec.fps = entry["fps"].get<double>();
            if (rec.fps <= 0.0) throw SchemaError("fps must be positive");
            const fs::path pose_path = fs::path(poses_dir) / entry["file"].get<std::string>();
            const CandidateFrames frames = load_pose_output(pose_path.string());
            PoseSequence tracked = track_skater(frames, rec.video_id, rec.fps);
            rec.frames = std::move(tracked.frames);
            for (const json& f : entry["flights"]) {
                if (!f.is_object() || !f.contains("start") || !f.contains("end"))
                    throw SchemaError("flight must be {\"start\", \"end\"}");
                rec.flights.push_back({f["start"].get<int>(), f["end"].get<int>()});
            }
            validate_spans(rec.flights, rec.frames.size());
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            std::cerr << "error: video '" << video_id << "': " << e.what() << '\n';
            ++failures;
        }
    }

    save_dataset(records, out_path);
    write_meta(out_path, "ingest", seed, settings,
               {{"annotations", annotations_path}, {"poses", poses_dir}, {"failures", failures}});
    if (root.empty()) std::cerr << "warning: annotations list no videos; wrote an empty dataset\n";
    std::cout << "ingested " << records.size() << " of " << root.size() << " videos into " << out_path << '\n';
    return failures == 0 ? 0 : kExitRuntime;
}

// ---------------------------------------------------------- train/finetune --

int cmd_train(const std::string& data_path, const std::string& val_path, const std::string& out_path,
              const std::string& loss_csv, const std::string& base_ckpt, std::uint64_t seed,
              const Settings& settings) {
    const std::vector<VideoRecord> records = load_dataset(data_path);
    std::vector<VideoRecord> val_records;
    if (!val_path.empty()) val_records = load_dataset(val_path);
    const std::vector<VideoRecord>* val = val_path.empty() ? nullptr : &val_records;

    const TrainConfig tc = train_config_from(settings, seed);

    const std::string csv_path = loss_csv.empty() ? out_path + ".loss.csv" : loss_csv;
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write loss log: " + csv_path);
    csv << "# seed=" << seed << " head=" << tc.head << " lr=" << tc.lr << " batch_size=" << tc.batch_size
        << " epochs=" << tc.epochs << '\n';
    csv << "epoch,loss" << (val ? ",val_accuracy" : "") << '\n';
    const EpochCallback log_epoch = [&](int epoch, double loss, std::optional<double> acc) {
        csv << epoch << ',' << loss;
        if (acc) csv << ',' << *acc;
        csv << '\n';
        csv.flush();
    };

    TrainResult result;
    if (base_ckpt.empty()) {
        result = train(records, model_config_from(settings), tc, val, log_epoch);
    } else {
        result = fine_tune(load_checkpoint(base_ckpt), records, tc, val, log_epoch);
    }
    save_checkpoint(result.checkpoint, out_path);
    std::cout << "checkpoint written to " << out_path << '\n';
    if (!result.loss_history.empty()) std::cout << "final loss " << result.loss_history.back() << '\n';
    if (!result.val_accuracy.empty()) std::cout << "final validation accuracy " << result.val_accuracy.back() << "%\n";
    return 0;
}

// ----------------------------------------------------------------- eval --

std::vector<TagSequence> decode_all(AirTimeModel& model, const std::vector<VideoRecord>& records,
                                    const std::map<std::string, nn::Tensor>* tables) {
    std::vector<TagSequence> preds;
    preds.reserve(records.size());
    for (const VideoRecord& r : records) {
        const nn::Tensor* table = nullptr;
        if (model.config().embedding_mode == "fixed") {
            if (tables == nullptr) throw DataError("fixed-embedding checkpoint needs --embeddings");
            auto it = tables->find(r.video_id);
            if (it == tables->end()) throw DataError("no embeddings for video '" + r.video_id + "'");
            table = &it->second;
        }
        preds.push_back(model.predict(r.frames, table).tags);
    }
    return preds;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const std::string& data_path, const std::string& out_path,
             const std::string& dump_path, const std::string& embeddings_path, bool oracle, bool by_category,
             std::uint64_t seed, const Settings& settings) {
    const std::vector<VideoRecord> records = load_dataset(data_path);
    if (records.empty()) throw DataError("dataset is empty: " + data_path);

    std::map<std::string, nn::Tensor> tables;
    if (!embeddings_path.empty()) tables = load_embedding_table(embeddings_path);

    json out_json;
    out_json["command"] = "eval";
    out_json["seed"] = seed;
    out_json["config"] = settings.to_json();
    out_json["dataset"] = data_path;
    out_json["oracle"] = oracle;

    std::ofstream dump;
    if (!dump_path.empty()) {
        dump.open(dump_path);
        if (!dump) throw DataError("cannot write predictions file: " + dump_path);
    }
    auto dump_preds = [&](const std::string& source, const std::vector<TagSequence>& preds) {
        if (!dump.is_open()) return;
        for (std::size_t i = 0; i < records.size(); ++i) {
            json line;
            line["source"] = source;
            line["video_id"] = records[i].video_id;
            line["gold"] = tags_to_string(intervals_to_tags(records[i].flights, records[i].length()));
            line["pred"] = tags_to_string(preds[i]);
            dump << line.dump() << '\n';
        }
    };

    std::vector<std::string> categories;
    {
        std::set<std::string> cats;
        for (const VideoRecord& r : records) cats.insert(r.category);
        categories.assign(cats.begin(), cats.end());
    }

    auto report_one = [&](const std::string& label, const std::vector<TagSequence>& preds, json& into) {
        const MetricsReport rep = evaluate_predictions(records, preds);
        std::cout << (label.empty() ? "" : label + "\n") << report_table(rep);
        into["report"] = json::parse(report_to_json(rep));
        if (by_category) {
            json per_cat = json::object();
            std::cout << "  accuracy by category:";
            for (const std::string& cat : categories) {
                std::vector<VideoRecord> sub;
                std::vector<TagSequence> sub_preds;
                for (std::size_t i = 0; i < records.size(); ++i) {
                    if (records[i].category != cat) continue;
                    sub.push_back(records[i]);
                    sub_preds.push_back(preds[i]);
                }
                const MetricsReport cat_rep = evaluate_predictions(sub, sub_preds);
                per_cat[cat] = json::parse(report_to_json(cat_rep));
                std::ostringstream cell;
                cell.setf(std::ios::fixed);
                cell.precision(2);
                cell << cat_rep.frame_accuracy;
                std::cout << "  " << cat << "=" << cell.str();
            }
            std::cout << '\n';
            into["by_category"] = std::move(per_cat);
        }
    };

    if (oracle) {
        std::vector<TagSequence> preds;
        preds.reserve(records.size());
        for (const VideoRecord& r : records) preds.push_back(intervals_to_tags(r.flights, r.length()));
        json entry;
        report_one("", preds, entry);
        dump_preds("oracle", preds);
        for (const auto& [k, v] : entry.items()) out_json[k] = v;
    } else {
        json evals = json::array();
        // With several checkpoints and --by-category this prints the
        // cross-action grid: one row per checkpoint, one column per category.
        std::vector<std::vector<std::string>> grid_rows;
        for (const std::string& ckpt_path : checkpoints) {
            AirTimeModel model = model_from_checkpoint(load_checkpoint(ckpt_path));
            const std::vector<TagSequence> preds =
                decode_all(model, records, embeddings_path.empty() ? nullptr : &tables);
            json entry;
            entry["checkpoint"] = ckpt_path;
            report_one(checkpoints.size() > 1 ? ckpt_path : "", preds, entry);
            dump_preds(ckpt_path, preds);
            if (by_category) {
                std::vector<std::string> row{fs::path(ckpt_path).filename().string()};
                for (const std::string& cat : categories) {
                    std::ostringstream cell;
                    cell.setf(std::ios::fixed);
                    cell.precision(2);
                    cell << entry["by_category"][cat]["frame_accuracy"].get<double>();
                    row.push_back(cell.str());
                }
                grid_rows.push_back(std::move(row));
            }
            evals.push_back(std::move(entry));
        }
        out_json["evaluations"] = std::move(evals);
        if (by_category && checkpoints.size() > 1) {
            std::cout << "accuracy grid (rows: checkpoints, columns: categories)\n";
            std::cout << "  checkpoint";
            for (const std::string& cat : categories) std::cout << '\t' << cat;
            std::cout << '\n';
            for (const auto& row : grid_rows) {
                std::cout << "  " << row[0];
                for (std::size_t c = 1; c < row.size(); ++c) std::cout << '\t' << row[c];
                std::cout << '\n';
            }
        }
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write report: " + out_path);
        out << out_json.dump(2) << '\n';
        std::cout << "report written to " << out_path << '\n';
    }
    return 0;
}

// --------------------------------------------------------------- predict --

int cmd_predict(const std::string& ckpt_path, const std::string& poses_path, double fps, const std::string& video_id,
                const std::string& out_path) {
    if (fps <= 0.0) throw UsageError("predict needs the video's fps metadata (--fps > 0)");
    AirTimeModel model = model_from_checkpoint(load_checkpoint(ckpt_path));
    if (model.config().embedding_mode == "fixed")
        throw ConfigError("predict runs the gcn pipeline; this checkpoint expects external fixed embeddings");
    const CandidateFrames frames = load_pose_output(poses_path);
    PoseSequence tracked = track_skater(frames, video_id, fps);
    const LabelPath path = model.predict(tracked.frames);
    const std::vector<FlightSpan> spans = tags_to_intervals(path.tags);

    json j;
    j["video_id"] = video_id;
    j["fps"] = fps;
    j["labels"] = tags_to_string(path.tags);
    json spans_json = json::array();
    for (const FlightSpan& s : spans) {
        const int air = s.end - s.start - 1;
        spans_json.push_back({{"start", s.start}, {"end", s.end}, {"air_frames", air}, {"seconds", air / fps}});
    }
    j["flights"] = std::move(spans_json);

    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write prediction file: " + out_path);
        out << j.dump(2) << '\n';
        std::cout << "prediction written to " << out_path << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"air-time detection pipeline for figure-skating jumps"};
    app.require_subcommand(1);
    app.fallthrough(); // --seed may follow the subcommand name

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();

    std::string config_path, data_path, val_path, out_path, poses_path, annotations_path, base_ckpt;
    std::string loss_csv, dump_path, embeddings_path, video_id = "video";
    std::vector<std::string> overrides, checkpoints;
    double fps = 0.0;
    bool oracle = false, by_category = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic jump dataset");
    synth->add_option("--out", out_path, "dataset file to write (JSON Lines)")->required();
    synth->add_option("--config", config_path, "key=value config file");
    synth->add_option("--set", overrides, "override one config key, e.g. --set videos=50");

    CLI::App* ingest = app.add_subcommand("ingest", "build a dataset from pose-estimator output");
    ingest->add_option("--poses", poses_path, "directory holding the pose output files")->required();
    ingest->add_option("--annotations", annotations_path, "JSON annotation file")->required();
    ingest->add_option("--out", out_path, "dataset file to write")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train a model from scratch");
    CLI::App* finetune = app.add_subcommand("finetune", "continue from a checkpoint's embedding and encoder");
    for (CLI::App* c : {train_cmd, finetune}) {
        c->add_option("--data", data_path, "training dataset")->required();
        c->add_option("--val", val_path, "validation dataset");
        c->add_option("--out", out_path, "checkpoint file to write")->required();
        c->add_option("--loss-csv", loss_csv, "per-epoch loss log (default: <out>.loss.csv)");
        c->add_option("--config", config_path, "key=value config file");
        c->add_option("--set", overrides, "override one config key");
    }
    finetune->add_option("--base", base_ckpt, "checkpoint to fine-tune from")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints on a dataset");
    eval_cmd->add_option("--checkpoint", checkpoints, "checkpoint file (repeat for a cross-action grid)");
    eval_cmd->add_option("--data", data_path, "evaluation dataset")->required();
    eval_cmd->add_option("--out", out_path, "JSON report file");
    eval_cmd->add_option("--dump-predictions", dump_path, "write per-video gold/pred label strings (JSON Lines)");
    eval_cmd->add_option("--embeddings", embeddings_path, "embedding table for fixed-embedding checkpoints");
    eval_cmd->add_flag("--oracle", oracle, "score the gold labels against themselves");
    eval_cmd->add_flag("--by-category", by_category, "report each category separately");

    CLI::App* predict = app.add_subcommand("predict", "label one video and report air times");
    predict->add_option("--checkpoint", base_ckpt, "checkpoint file")->required();
    predict->add_option("--poses", poses_path, "pose-estimator output for the video")->required();
    predict->add_option("--fps", fps, "frames per second of the video");
    predict->add_option("--video-id", video_id, "id used in the output")->capture_default_str();
    predict->add_option("--out", out_path, "JSON output file (default: stdout)");

    CLI::App* stats = app.add_subcommand("stats", "per-category counts of a dataset");
    stats->add_option("--data", data_path, "dataset file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage; // help/version keep success
    }

    try {
        if (synth->parsed()) {
            Settings s;
            declare_synth_keys(s);
            if (!config_path.empty()) s.load_file(config_path);
            s.apply_overrides(overrides);
            return cmd_synth(out_path, seed, s);
        }
        if (ingest->parsed()) {
            Settings s;
            return cmd_ingest(poses_path, annotations_path, out_path, seed, s);
        }
        if (train_cmd->parsed() || finetune->parsed()) {
            Settings s;
            declare_model_keys(s);
            declare_train_keys(s, finetune->parsed() ? "classification" : "crf");
            if (!config_path.empty()) s.load_file(config_path);
            s.apply_overrides(overrides);
            return cmd_train(data_path, val_path, out_path, loss_csv, finetune->parsed() ? base_ckpt : "", seed, s);
        }
        if (eval_cmd->parsed()) {
            if (!oracle && checkpoints.empty())
                throw UsageError("eval needs --checkpoint (or --oracle to score gold against itself)");
            Settings s;
            return cmd_eval(checkpoints, data_path, out_path, dump_path, embeddings_path, oracle, by_category, seed, s);
        }
        if (predict->parsed()) return cmd_predict(base_ckpt, poses_path, fps, video_id, out_path);
        if (stats->parsed()) {
            const std::vector<VideoRecord> records = load_dataset(data_path);
            std::cout << data_path << ": " << records.size() << " videos\n";
            if (!records.empty()) print_dataset_stats(records, std::cout);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
