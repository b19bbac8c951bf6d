#include "airtime/augment.hpp"

#include <algorithm>

#include "airtime/error.hpp"
#include "airtime/tags.hpp"

namespace airtime {

namespace {
constexpr int kContextFrames = 30;
}

std::vector<VideoRecord> augment(const VideoRecord& record, int stride) {
    if (stride <= 0) throw UsageError("augment: stride must be positive");
    if (record.flights.empty()) throw UsageError("augment: record " + record.video_id + " has no flights");
    validate_spans(record.flights, record.frames.size());

    const int t = static_cast<int>(record.frames.size());
    const int left_max = std::max(0, record.flights.front().start - kContextFrames);
    const int right_max = std::max(0, (t - 1) - record.flights.back().end - kContextFrames);

    std::vector<VideoRecord> out;
    for (int left = 0; left <= left_max; left += stride) {
        for (int right = 0; right <= right_max; right += stride) {
            VideoRecord v;
            v.video_id = record.video_id + "#l" + std::to_string(left) + "r" + std::to_string(right);
            v.category = record.category;
            v.fps = record.fps;
            v.frames.assign(record.frames.begin() + left, record.frames.end() - right);
            v.flights.reserve(record.flights.size());
            for (const FlightSpan& f : record.flights) v.flights.push_back({f.start - left, f.end - left});
            out.push_back(std::move(v));
        }
    }
    return out;
}

} // namespace airtime
