#ifndef AIRTIME_SYNTHETIC_HPP
#define AIRTIME_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "airtime/pose.hpp"
#include "airtime/pose_io.hpp"

namespace airtime {

/// Knobs for the built-in jump generator. Defaults produce videos short
/// enough for laptop-scale training while leaving room for 1-3 jumps.
struct SynthConfig {
    int num_videos = 20;
    double fps = 30.0;
    int min_frames = 56;
    int max_frames = 128;
    int min_flights = 1;
    int max_flights = 3;
    int min_flight_len = 8;  // frames per flight, take-off through landing
    int max_flight_len = 14;
    int context = 20;  // guaranteed ground frames before the first take-off and after the last landing
    int min_gap = 8;   // ground frames between consecutive flights
    double jump_height_min = 35.0;  // peak lift of the arc, pixels
    double jump_height_max = 55.0;
    double noise_sigma = 2.0;      // per-coordinate Gaussian noise
    int speed_buckets = 1;         // distinct in-flight rotation speeds
    double distractor_prob = 0.0;  // chance of a second person in the detections

    /// Throws ConfigError on out-of-range fields or when min_flights
    /// flights of worst-case length cannot fit into min_frames.
    void validate() const;
};

/// One generated video: the ground-truth record plus the simulated
/// pose-estimator detections the record was projected from.
struct SynthVideo {
    VideoRecord record;
    CandidateFrames detections;
};

/// Category label for a video with `flights` jumps in rotation-speed
/// bucket `bucket`, e.g. "f2s0".
std::string synth_category(int flights, int bucket);

/// Deterministic 2D kinematic skater: horizontal glide, whole-skeleton
/// parabolic lift during each flight, oscillating limbs, in-flight
/// rotation (speed set by the category bucket), coordinate noise, and an
/// optional lower-confidence distractor person in the detections.
/// Ground-truth spans are exact by construction. Pure in (config, seed).
std::vector<SynthVideo> generate_synthetic_with_detections(const SynthConfig& config, std::uint64_t seed);

/// The records alone; identical to the `record` fields of
/// generate_synthetic_with_detections(config, seed).
std::vector<VideoRecord> generate_synthetic(const SynthConfig& config, std::uint64_t seed);

} // namespace airtime

#endif
