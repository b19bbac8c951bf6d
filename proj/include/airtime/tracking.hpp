#ifndef AIRTIME_TRACKING_HPP
#define AIRTIME_TRACKING_HPP

#include <string>

#include "airtime/pose.hpp"
#include "airtime/pose_io.hpp"

namespace airtime {

/// Euclidean distance between two 17-joint poses: square root of the sum of
/// squared coordinate differences over all joints.
double pose_distance(const Pose& a, const Pose& b);

/// Pick the skater out of multi-person detections. The first frame takes
/// the candidate with the highest confidence; every later frame takes the
/// candidate closest (pose_distance) to the previously tracked pose, lowest
/// candidate index on ties. Frames with no candidates reuse the previous
/// tracked pose and get their `held` flag set so downstream stages can tell.
///
/// Throws TrackingError when the first frame has no candidates.
PoseSequence track_skater(const CandidateFrames& candidates, const std::string& video_id = "", double fps = 0.0);

} // namespace airtime

#endif
