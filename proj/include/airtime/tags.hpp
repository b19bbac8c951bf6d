#ifndef AIRTIME_TAGS_HPP
#define AIRTIME_TAGS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "airtime/pose.hpp"

namespace airtime {

/// Throws SpanError unless the spans are in order, inside [0, length), at
/// least 3 frames long (one take-off, one in-air, one landing frame) and
/// separated by at least one non-flight frame.
void validate_spans(const std::vector<FlightSpan>& flights, std::size_t length);

/// Flight spans -> per-frame labels: start gets B, the interior gets I,
/// end gets E, everything else O.
TagSequence intervals_to_tags(const std::vector<FlightSpan>& flights, std::size_t length);

/// Inverse codec, total on arbitrary label sequences: every maximal run of
/// non-O labels becomes one span from its first to its last frame. Label
/// sequences produced by intervals_to_tags round-trip exactly.
std::vector<FlightSpan> tags_to_intervals(const TagSequence& tags);

/// True when the sequence obeys the flight grammar: only the adjacent pairs
/// O-O, O-B, B-I, I-I, I-E and E-O occur, the sequence starts with O or B
/// and ends with O or E. Equivalently, runs shaped B I+ E with O everywhere
/// else.
bool tags_grammar_valid(const TagSequence& tags);

/// Seconds in the air per flight: the number of in-air (I) frames of each
/// maximal non-O run divided by fps. Throws ConfigError if fps <= 0.
std::vector<double> air_time(const TagSequence& tags, double fps);

/// Label string like "OOBIIEO", handy in errors and tests.
std::string tags_to_string(const TagSequence& tags);

} // namespace airtime

#endif
