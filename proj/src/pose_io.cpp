#include "airtime/pose_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "airtime/error.hpp"
#include "airtime/tags.hpp"

namespace airtime {

using nlohmann::json;

namespace {

double finite_number(const json& j, const std::string& what) {
    if (!j.is_number()) throw SchemaError(what + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(what + ": not finite");
    return v;
}

double score_in_unit_range(const json& j, const std::string& what) {
    const double v = finite_number(j, what);
    if (v < 0.0 || v > 1.0) throw SchemaError(what + ": score " + std::to_string(v) + " outside [0,1]");
    return v;
}

PoseCandidate parse_candidate(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": candidate is not an object");
    if (!j.contains("keypoints") || !j.contains("score")) throw SchemaError(where + ": candidate needs \"keypoints\" and \"score\"");
    const json& kps = j["keypoints"];
    if (!kps.is_array() || kps.size() != static_cast<std::size_t>(kNumJoints))
        throw SchemaError(where + ": expected 17 keypoints, got " + std::to_string(kps.is_array() ? kps.size() : 0));
    PoseCandidate cand;
    cand.confidence = score_in_unit_range(j["score"], where + " score");
    for (int k = 0; k < kNumJoints; ++k) {
        const json& kp = kps[static_cast<std::size_t>(k)];
        if (!kp.is_array() || kp.size() != 3) throw SchemaError(where + " keypoint " + std::to_string(k) + ": expected [x, y, score]");
        cand.keypoints[static_cast<std::size_t>(k)].x = finite_number(kp[0], where + " keypoint " + std::to_string(k) + " x");
        cand.keypoints[static_cast<std::size_t>(k)].y = finite_number(kp[1], where + " keypoint " + std::to_string(k) + " y");
        cand.keypoints[static_cast<std::size_t>(k)].score = score_in_unit_range(kp[2], where + " keypoint " + std::to_string(k) + " score");
    }
    return cand;
}

} // namespace

CandidateFrames parse_pose_output(std::istream& stream) {
    json root;
    try {
        root = json::parse(stream);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("pose output: ") + e.what());
    }
    if (!root.is_array()) throw SchemaError("pose output: top level must be an array of frames");
    CandidateFrames frames;
    frames.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        const json& frame = root[i];
        const std::string where = "frame " + std::to_string(i);
        if (!frame.is_array()) throw SchemaError(where + ": expected an array of candidates");
        std::vector<PoseCandidate> cands;
        cands.reserve(frame.size());
        for (const json& c : frame) cands.push_back(parse_candidate(c, where));
        frames.push_back(std::move(cands));
    }
    return frames;
}

CandidateFrames parse_pose_output(const std::string& text) {
    std::istringstream ss(text);
    return parse_pose_output(ss);
}

CandidateFrames load_pose_output(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pose output file: " + path);
    return parse_pose_output(in);
}

std::string pose_output_to_json(const CandidateFrames& frames) {
    json root = json::array();
    for (const auto& cands : frames) {
        json frame = json::array();
        for (const PoseCandidate& c : cands) {
            json kps = json::array();
            for (const Keypoint& kp : c.keypoints) kps.push_back(json::array({kp.x, kp.y, kp.score}));
            frame.push_back({{"keypoints", std::move(kps)}, {"score", c.confidence}});
        }
        root.push_back(std::move(frame));
    }
    return root.dump();
}

std::string record_to_json_line(const VideoRecord& record) {
    json j;
    j["video_id"] = record.video_id;
    j["category"] = record.category;
    j["fps"] = record.fps;
    json frames = json::array();
    for (const Pose& pose : record.frames) {
        json fr = json::array();
        for (const Vec2& p : pose) fr.push_back(json::array({p.x, p.y}));
        frames.push_back(std::move(fr));
    }
    j["frames"] = std::move(frames);
    json flights = json::array();
    for (const FlightSpan& f : record.flights) flights.push_back({{"start", f.start}, {"end", f.end}});
    j["flights"] = std::move(flights);
    return j.dump();
}

VideoRecord record_from_json_line(const std::string& line, std::size_t line_no) {
    const std::string where = "dataset line " + std::to_string(line_no);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    for (const char* key : {"video_id", "category", "fps", "frames", "flights"})
        if (!j.contains(key)) throw SchemaError(where + ": missing \"" + key + "\"");

    VideoRecord rec;
    rec.video_id = j["video_id"].get<std::string>();
    rec.category = j["category"].get<std::string>();
    rec.fps = finite_number(j["fps"], where + " fps");
    if (rec.fps <= 0.0) throw SchemaError(where + ": fps must be positive");

    const json& frames = j["frames"];
    if (!frames.is_array() || frames.empty()) throw SchemaError(where + ": \"frames\" must be a non-empty array");
    rec.frames.reserve(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const json& fr = frames[f];
        if (!fr.is_array() || fr.size() != static_cast<std::size_t>(kNumJoints))
            throw SchemaError(where + " frame " + std::to_string(f) + ": expected 17 joints");
        Pose pose;
        for (int k = 0; k < kNumJoints; ++k) {
            const json& pt = fr[static_cast<std::size_t>(k)];
            if (!pt.is_array() || pt.size() != 2) throw SchemaError(where + " frame " + std::to_string(f) + ": joint must be [x, y]");
            pose[static_cast<std::size_t>(k)].x = finite_number(pt[0], where + " joint x");
            pose[static_cast<std::size_t>(k)].y = finite_number(pt[1], where + " joint y");
        }
        rec.frames.push_back(pose);
    }

    for (const json& f : j["flights"]) {
        if (!f.is_object() || !f.contains("start") || !f.contains("end"))
            throw SchemaError(where + ": flight must be {\"start\", \"end\"}");
        rec.flights.push_back({f["start"].get<int>(), f["end"].get<int>()});
    }
    try {
        validate_spans(rec.flights, rec.frames.size());
    } catch (const SpanError& e) {
        throw SpanError(where + ": " + e.what());
    }
    return rec;
}

std::vector<VideoRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::vector<VideoRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        records.push_back(record_from_json_line(line, line_no));
    }
    return records;
}

void save_dataset(const std::vector<VideoRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open dataset file for writing: " + path);
    for (const VideoRecord& rec : records) out << record_to_json_line(rec) << '\n';
    if (!out) throw DataError("failed writing dataset file: " + path);
}

std::map<std::string, nn::Tensor> load_embedding_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding table: " + path);
    std::map<std::string, nn::Tensor> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "embedding table line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!j.contains("video_id") || !j.contains("embeddings")) throw SchemaError(where + ": missing \"video_id\" or \"embeddings\"");
        const json& rows = j["embeddings"];
        if (!rows.is_array() || rows.empty()) throw SchemaError(where + ": \"embeddings\" must be a non-empty array");
        const std::size_t width = rows[0].is_array() ? rows[0].size() : 0;
        if (width == 0) throw SchemaError(where + ": embedding rows must be non-empty arrays");
        nn::Tensor t(rows.size(), width);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].is_array() || rows[r].size() != width) throw SchemaError(where + ": ragged embedding rows");
            for (std::size_t c = 0; c < width; ++c) t(r, c) = finite_number(rows[r][c], where);
        }
        table[j["video_id"].get<std::string>()] = std::move(t);
    }
    return table;
}

void save_embedding_table(const std::map<std::string, nn::Tensor>& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open embedding table for writing: " + path);
    for (const auto& [id, t] : table) {
        json rows = json::array();
        for (std::size_t r = 0; r < t.rows(); ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
            rows.push_back(std::move(row));
        }
        out << json{{"video_id", id}, {"embeddings", std::move(rows)}}.dump() << '\n';
    }
}

} // namespace airtime
