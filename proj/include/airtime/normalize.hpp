#ifndef AIRTIME_NORMALIZE_HPP
#define AIRTIME_NORMALIZE_HPP

#include <vector>

#include "airtime/pose.hpp"

namespace airtime {

/// Remove camera position and resolution from a pose sequence: every frame
/// is translated so its hip midpoint sits at the origin, then all frames
/// are divided by the per-video median torso length (hip midpoint to
/// shoulder midpoint). The result is invariant to global translation and
/// uniform scaling of the input.
///
/// Throws DataError when the median torso length is zero (degenerate pose).
std::vector<Pose> normalize_pose(const std::vector<Pose>& frames);

PoseSequence normalize_pose(const PoseSequence& seq);

} // namespace airtime

#endif
