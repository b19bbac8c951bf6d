#ifndef AIRTIME_METRICS_HPP
#define AIRTIME_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "airtime/pose.hpp"

namespace airtime {

/// One prediction and the gold span it overlaps most (if any).
struct SpanMatch {
    FlightSpan pred;
    bool matched = false;
    FlightSpan gold;
    int overlap = 0; // shared frames, >= 1 when matched
};

/// 100 x matching frames / total frames, frame-weighted across videos.
/// Throws DataError on length mismatch.
double frame_accuracy(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred);

/// Unweighted mean of per-label F1 over {O,B,I,E}, counted across all
/// videos. Labels absent from both gold and prediction are left out of
/// the mean.
double macro_f1(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred);

/// Pair each prediction with the gold span sharing the most frames, ties
/// toward the earlier gold span; each gold span matches at most one
/// prediction (greedy by overlap size). Predictions overlapping nothing
/// come back unmatched.
std::vector<SpanMatch> match_spans(const std::vector<FlightSpan>& pred, const std::vector<FlightSpan>& gold);

/// In-air frame count of a span, the length used by the error metric.
inline int span_air_frames(const FlightSpan& f) { return f.end - f.start - 1; }

/// Mean over matched predictions of |len(pred) - len(gold)| / len(gold)
/// x 100, with len = in-air frame count. Empty when nothing matched.
std::optional<double> mean_error_percentage(const std::vector<SpanMatch>& matches);

/// Unit-cost Levenshtein distance between two label sequences.
int edit_distance(const TagSequence& a, const TagSequence& b);

/// Mean per-video edit distance. Throws DataError on length mismatch.
double avg_edit_distance(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred);

struct MetricsReport {
    double frame_accuracy = 0.0;             // percent
    double macro_f1 = 0.0;                   // [0,1]
    std::optional<double> mean_error;        // percent; absent when no prediction overlaps
    std::size_t overlapping = 0;             // N, matched predictions
    std::size_t predictions = 0;
    std::size_t gold_spans = 0;
    double avg_edit_distance = 0.0;

    struct PerVideo {
        std::string video_id;
        double accuracy = 0.0;
        int edit = 0;
        std::size_t gold_spans = 0;
        std::size_t predictions = 0;
        std::size_t matched = 0;
        std::optional<double> mean_error;
    };
    std::vector<PerVideo> videos; // sorted by video_id
};

/// All four metrics for per-video predicted label sequences against the
/// records' gold flights. preds[i] belongs to records[i].
MetricsReport evaluate_predictions(const std::vector<VideoRecord>& records, const std::vector<TagSequence>& preds);

std::string report_to_json(const MetricsReport& report);
/// Aligned two-column text table of the aggregate metrics.
std::string report_table(const MetricsReport& report);

} // namespace airtime

#endif
