#ifndef AIRTIME_AUGMENT_HPP
#define AIRTIME_AUGMENT_HPP

#include <vector>

#include "airtime/pose.hpp"

namespace airtime {

/// Multiply one annotated video into trimmed variants. Left trim offsets
/// run {0, stride, 2*stride, ...} and stop while at least 30 frames remain
/// before the first take-off; right trims do the same after the last
/// landing; the output is the cross product, flights re-indexed per copy. A
/// video that already has fewer than 30 context frames on a side is not
/// trimmed on that side. Variant ids get a "#l<left>r<right>" suffix; the
/// l0r0 variant is the untrimmed original.
///
/// Throws UsageError when the record has no flights, SpanError when its
/// flights are invalid.
std::vector<VideoRecord> augment(const VideoRecord& record, int stride);

} // namespace airtime

#endif
