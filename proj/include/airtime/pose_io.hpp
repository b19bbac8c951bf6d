#ifndef AIRTIME_POSE_IO_HPP
#define AIRTIME_POSE_IO_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "airtime/pose.hpp"
#include "airtime/tensor.hpp"

namespace airtime {

/// Per-frame candidate lists parsed from pose-estimator output.
using CandidateFrames = std::vector<std::vector<PoseCandidate>>;

/// Parse multi-person pose-estimator output.
///
/// Schema: a top-level JSON array with one entry per frame; each frame is an
/// array of candidates; each candidate is an object
///   {"keypoints": [[x, y, score] x17], "score": s}
/// with finite coordinates and scores in [0,1]. Frame order is preserved and
/// a frame with no candidates parses to an empty list.
///
/// Throws ParseError on malformed JSON and SchemaError (naming the frame)
/// on structural violations.
CandidateFrames parse_pose_output(std::istream& stream);
CandidateFrames parse_pose_output(const std::string& text);
CandidateFrames load_pose_output(const std::string& path);

/// Serialize candidate frames back to the schema parse_pose_output reads.
std::string pose_output_to_json(const CandidateFrames& frames);

/// Dataset files are JSON Lines: one record per line,
///   {"video_id": str, "category": str, "fps": num,
///    "frames": [[[x, y] x17], ...], "flights": [{"start": i, "end": j}, ...]}
std::vector<VideoRecord> load_dataset(const std::string& path);
void save_dataset(const std::vector<VideoRecord>& records, const std::string& path);
std::string record_to_json_line(const VideoRecord& record);
VideoRecord record_from_json_line(const std::string& line, std::size_t line_no = 0);

/// Externally computed per-frame embedding tables, JSON Lines of
///   {"video_id": str, "embeddings": [[f x width] xT]}.
/// Every row of one video must have the same width.
std::map<std::string, nn::Tensor> load_embedding_table(const std::string& path);
void save_embedding_table(const std::map<std::string, nn::Tensor>& table, const std::string& path);

} // namespace airtime

#endif
