#include "airtime/tracking.hpp"

#include <cmath>

#include "airtime/error.hpp"

namespace airtime {

namespace {
Pose candidate_pose(const PoseCandidate& c) {
    Pose p;
    for (int k = 0; k < kNumJoints; ++k) {
        p[static_cast<std::size_t>(k)].x = c.keypoints[static_cast<std::size_t>(k)].x;
        p[static_cast<std::size_t>(k)].y = c.keypoints[static_cast<std::size_t>(k)].y;
    }
    return p;
}
} // namespace

double pose_distance(const Pose& a, const Pose& b) {
    double sq = 0.0;
    for (int k = 0; k < kNumJoints; ++k) {
        const double dx = a[static_cast<std::size_t>(k)].x - b[static_cast<std::size_t>(k)].x;
        const double dy = a[static_cast<std::size_t>(k)].y - b[static_cast<std::size_t>(k)].y;
        sq += dx * dx + dy * dy;
    }
    return std::sqrt(sq);
}

PoseSequence track_skater(const CandidateFrames& candidates, const std::string& video_id, double fps) {
    if (candidates.empty()) throw TrackingError("no frames to track" + (video_id.empty() ? "" : " in " + video_id));
    if (candidates.front().empty())
        throw TrackingError("first frame has no pose candidates" + (video_id.empty() ? "" : " in " + video_id));

    PoseSequence seq;
    seq.video_id = video_id;
    seq.fps = fps;
    seq.frames.reserve(candidates.size());
    seq.held.assign(candidates.size(), 0);

    {
        std::size_t best = 0;
        for (std::size_t j = 1; j < candidates[0].size(); ++j)
            if (candidates[0][j].confidence > candidates[0][best].confidence) best = j;
        seq.frames.push_back(candidate_pose(candidates[0][best]));
    }

    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].empty()) {
            seq.frames.push_back(seq.frames.back());
            seq.held[i] = 1;
            continue;
        }
        const Pose& prev = seq.frames.back();
        std::size_t best = 0;
        double best_dist = pose_distance(prev, candidate_pose(candidates[i][0]));
        for (std::size_t j = 1; j < candidates[i].size(); ++j) {
            const double d = pose_distance(prev, candidate_pose(candidates[i][j]));
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        seq.frames.push_back(candidate_pose(candidates[i][best]));
    }
    return seq;
}

} // namespace airtime
