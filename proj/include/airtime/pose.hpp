#ifndef AIRTIME_POSE_HPP
#define AIRTIME_POSE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace airtime {

/// COCO joint indices for the 17-keypoint convention used everywhere in
/// this library. Coordinates are pixels, y growing downward.
enum CocoJoint : int {
    kNose = 0,
    kLeftEye = 1,
    kRightEye = 2,
    kLeftEar = 3,
    kRightEar = 4,
    kLeftShoulder = 5,
    kRightShoulder = 6,
    kLeftElbow = 7,
    kRightElbow = 8,
    kLeftWrist = 9,
    kRightWrist = 10,
    kLeftHip = 11,
    kRightHip = 12,
    kLeftKnee = 13,
    kRightKnee = 14,
    kLeftAnkle = 15,
    kRightAnkle = 16,
};

inline constexpr int kNumJoints = 17;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// One joint of a detected pose candidate.
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double score = 0.0; // detector confidence in [0,1]
};

/// One detected person in one frame, as emitted by a 2D pose estimator.
struct PoseCandidate {
    std::array<Keypoint, kNumJoints> keypoints{};
    double confidence = 0.0; // whole-detection score in [0,1]
};

/// 17 joint coordinates of the tracked skater for a single frame.
using Pose = std::array<Vec2, kNumJoints>;

/// The tracked skater across a whole video. `held[i]` is set when frame i
/// had no detection and the previous tracked pose was carried forward.
struct PoseSequence {
    std::string video_id;
    double fps = 0.0;
    std::vector<Pose> frames;
    std::vector<std::uint8_t> held;

    std::size_t length() const { return frames.size(); }
};

/// One flight phase: `start` is the take-off frame, `end` the landing
/// frame, both inclusive. A valid flight has at least one in-air frame
/// between them (end >= start + 2).
struct FlightSpan {
    int start = 0;
    int end = 0;

    friend bool operator==(const FlightSpan&, const FlightSpan&) = default;
};

/// Per-frame flight labels.
enum class Tag : std::uint8_t { O = 0, B = 1, I = 2, E = 3 };

inline constexpr int kNumTags = 4;

using TagSequence = std::vector<Tag>;

inline char tag_char(Tag t) { return "OBIE"[static_cast<int>(t)]; }

/// One annotated video: the tracked pose sequence plus its gold flights.
struct VideoRecord {
    std::string video_id;
    std::string category;
    double fps = 0.0;
    std::vector<Pose> frames;
    std::vector<FlightSpan> flights;

    std::size_t length() const { return frames.size(); }
};

} // namespace airtime

#endif
