#include "airtime/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "airtime/error.hpp"

namespace airtime {

namespace {
Vec2 midpoint(const Pose& p, int a, int b) {
    return {0.5 * (p[static_cast<std::size_t>(a)].x + p[static_cast<std::size_t>(b)].x),
            0.5 * (p[static_cast<std::size_t>(a)].y + p[static_cast<std::size_t>(b)].y)};
}
} // namespace

std::vector<Pose> normalize_pose(const std::vector<Pose>& frames) {
    if (frames.empty()) throw DataError("normalize_pose: empty sequence");

    std::vector<double> torso(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Vec2 hip = midpoint(frames[i], kLeftHip, kRightHip);
        const Vec2 shoulder = midpoint(frames[i], kLeftShoulder, kRightShoulder);
        torso[i] = std::hypot(shoulder.x - hip.x, shoulder.y - hip.y);
    }
    std::vector<double> sorted = torso;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (median <= 0.0) throw DataError("normalize_pose: degenerate pose, median torso length is zero");

    std::vector<Pose> out(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Vec2 hip = midpoint(frames[i], kLeftHip, kRightHip);
        for (int k = 0; k < kNumJoints; ++k) {
            out[i][static_cast<std::size_t>(k)].x = (frames[i][static_cast<std::size_t>(k)].x - hip.x) / median;
            out[i][static_cast<std::size_t>(k)].y = (frames[i][static_cast<std::size_t>(k)].y - hip.y) / median;
        }
    }
    return out;
}

PoseSequence normalize_pose(const PoseSequence& seq) {
    PoseSequence out = seq;
    out.frames = normalize_pose(seq.frames);
    return out;
}

} // namespace airtime
