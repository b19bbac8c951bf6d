#include "airtime/synthetic.hpp"

#include <cmath>
#include <string>

#include "airtime/error.hpp"
#include "airtime/rng.hpp"
#include "airtime/tags.hpp"

namespace airtime {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Joint offsets from the hip midpoint in pixels (y grows downward), an
// upright figure roughly 160 px tall at scale 1.
constexpr double kTemplate[kNumJoints][2] = {
    {0.0, -80.0},   // nose
    {4.0, -84.0},   // left eye
    {-4.0, -84.0},  // right eye
    {8.0, -82.0},   // left ear
    {-8.0, -82.0},  // right ear
    {16.0, -55.0},  // left shoulder
    {-16.0, -55.0}, // right shoulder
    {24.0, -30.0},  // left elbow
    {-24.0, -30.0}, // right elbow
    {28.0, -5.0},   // left wrist
    {-28.0, -5.0},  // right wrist
    {10.0, 0.0},    // left hip
    {-10.0, 0.0},   // right hip
    {11.0, 38.0},   // left knee
    {-11.0, 38.0},  // right knee
    {12.0, 75.0},   // left ankle
    {-12.0, 75.0},  // right ankle
};

// Largest flight count whose worst-case layout fits in frames.
int max_flights_that_fit(const SynthConfig& c, int frames) {
    int n = 0;
    while (n < c.max_flights) {
        const int need = 2 * c.context + (n + 1) * c.max_flight_len + n * c.min_gap;
        if (need > frames) break;
        ++n;
    }
    return n;
}

// Limb swing offsets for one joint at phase theta; arms and legs move in
// anti-phase, left and right sides in anti-phase, ankle and knee y stay
// fixed so the flight arc is the only vertical motion of the legs.
Vec2 swing_offset(int joint, double theta) {
    const double left = (joint % 2 == 1) ? 0.0 : kPi; // odd indices are left-side joints
    switch (joint) {
        case kLeftWrist:
        case kRightWrist:
            return {8.0 * std::sin(theta + left), 6.0 * std::cos(theta + left)};
        case kLeftElbow:
        case kRightElbow:
            return {4.0 * std::sin(theta + left), 3.0 * std::cos(theta + left)};
        case kLeftKnee:
        case kRightKnee:
            return {3.0 * std::sin(theta + kPi + left), 0.0};
        case kLeftAnkle:
        case kRightAnkle:
            return {5.0 * std::sin(theta + kPi + left), 0.0};
        default:
            return {0.0, 0.0};
    }
}

SynthVideo generate_one(const SynthConfig& c, std::uint64_t seed, int index) {
    CounterRng rng = CounterRng::stream(seed, 0xDA7A0000ULL + static_cast<std::uint64_t>(index));

    const int frames = rng.uniform_int(c.min_frames, c.max_frames);
    const int cap = max_flights_that_fit(c, frames);
    const int n_flights = rng.uniform_int(c.min_flights, cap);

    std::vector<int> lens(static_cast<std::size_t>(n_flights));
    int total_len = 0;
    for (int& len : lens) {
        len = rng.uniform_int(c.min_flight_len, c.max_flight_len);
        total_len += len;
    }

    // Spread the spare frames over the lead-in, the inter-flight gaps and
    // the tail, one frame at a time.
    int slack = frames - (2 * c.context + total_len + (n_flights - 1) * c.min_gap);
    std::vector<int> extra(static_cast<std::size_t>(n_flights) + 1, 0);
    for (int u = 0; u < slack; ++u) ++extra[static_cast<std::size_t>(rng.uniform_int(0, n_flights))];

    SynthVideo video;
    VideoRecord& rec = video.record;
    int cursor = c.context + extra[0];
    for (int k = 0; k < n_flights; ++k) {
        const int start = cursor;
        const int end = start + lens[static_cast<std::size_t>(k)] - 1;
        rec.flights.push_back({start, end});
        cursor = end + 1 + c.min_gap;
        if (k + 1 < n_flights) cursor += extra[static_cast<std::size_t>(k) + 1];
    }

    const int bucket = rng.uniform_int(0, c.speed_buckets - 1);
    rec.video_id = "synth" + std::to_string(seed) + "_" + std::to_string(index);
    rec.category = synth_category(n_flights, bucket);
    rec.fps = c.fps;

    const double scale = rng.uniform(0.9, 1.1);
    const double vx = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.0, 3.0);
    const double x0 = rng.uniform(700.0, 1200.0) - vx * frames / 2.0;
    const double y_base = rng.uniform(520.0, 680.0);
    const double phase0 = rng.uniform(0.0, 2.0 * kPi);
    const double swing_speed = rng.uniform(0.10, 0.22);
    const double spin_speed = 0.35 + 0.30 * bucket; // rad per frame while airborne

    std::vector<double> heights(static_cast<std::size_t>(n_flights));
    for (double& h : heights) h = rng.uniform(c.jump_height_min, c.jump_height_max);

    const bool has_distractor = rng.uniform() < c.distractor_prob;
    const double d_x = rng.uniform(150.0, 1750.0);
    const double d_y = y_base - rng.uniform(150.0, 250.0);
    const double d_scale = rng.uniform(0.9, 1.1);

    rec.frames.reserve(static_cast<std::size_t>(frames));
    video.detections.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        double lift = 0.0;
        double spin = 0.0;
        for (int k = 0; k < n_flights; ++k) {
            const FlightSpan& f = rec.flights[static_cast<std::size_t>(k)];
            if (t < f.start || t > f.end) continue;
            const double s = static_cast<double>(t - f.start) / (f.end - f.start);
            lift = 4.0 * heights[static_cast<std::size_t>(k)] * s * (1.0 - s);
            spin = spin_speed * (t - f.start);
            break;
        }
        const double root_x = x0 + vx * t;
        const double theta = phase0 + swing_speed * t;
        const double facing = std::cos(spin); // x-compression of a body rotating about the vertical axis

        Pose pose;
        PoseCandidate skater;
        skater.confidence = rng.uniform(0.75, 0.95);
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec2 sw = swing_offset(j, theta);
            double x = root_x + (kTemplate[j][0] * scale + sw.x) * facing;
            double y = y_base + kTemplate[j][1] * scale + sw.y - lift;
            if (c.noise_sigma > 0.0) {
                x += rng.normal() * c.noise_sigma;
                y += rng.normal() * c.noise_sigma;
            }
            pose[static_cast<std::size_t>(j)] = {x, y};
            skater.keypoints[static_cast<std::size_t>(j)] = {x, y, rng.uniform(0.6, 0.99)};
        }
        rec.frames.push_back(pose);

        std::vector<PoseCandidate> cands;
        cands.push_back(skater);
        if (has_distractor) {
            PoseCandidate other;
            other.confidence = rng.uniform(0.30, 0.60);
            for (int j = 0; j < kNumJoints; ++j) {
                other.keypoints[static_cast<std::size_t>(j)] = {
                    d_x + kTemplate[j][0] * d_scale + rng.normal(),
                    d_y + kTemplate[j][1] * d_scale + rng.normal(),
                    rng.uniform(0.6, 0.99),
                };
            }
            cands.push_back(other);
        }
        video.detections.push_back(std::move(cands));
    }

    validate_spans(rec.flights, rec.frames.size());
    return video;
}

} // namespace

void SynthConfig::validate() const {
    if (num_videos <= 0) throw ConfigError("synth: num_videos must be positive");
    if (fps <= 0.0) throw ConfigError("synth: fps must be positive");
    if (min_frames <= 0 || max_frames < min_frames) throw ConfigError("synth: need 0 < min_frames <= max_frames");
    if (min_flights < 1 || max_flights < min_flights) throw ConfigError("synth: need 1 <= min_flights <= max_flights");
    if (min_flight_len < 3 || max_flight_len < min_flight_len)
        throw ConfigError("synth: need 3 <= min_flight_len <= max_flight_len");
    if (context < 0) throw ConfigError("synth: context must be non-negative");
    if (min_gap < 1) throw ConfigError("synth: min_gap must be at least 1");
    if (jump_height_min <= 0.0 || jump_height_max < jump_height_min)
        throw ConfigError("synth: need 0 < jump_height_min <= jump_height_max");
    if (noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be non-negative");
    if (speed_buckets < 1) throw ConfigError("synth: speed_buckets must be at least 1");
    if (distractor_prob < 0.0 || distractor_prob > 1.0) throw ConfigError("synth: distractor_prob must be in [0,1]");
    if (max_flights_that_fit(*this, min_frames) < min_flights)
        throw ConfigError("synth: " + std::to_string(min_flights) + " flights of up to " +
                          std::to_string(max_flight_len) + " frames with context " + std::to_string(context) +
                          " and gap " + std::to_string(min_gap) + " cannot fit in min_frames=" +
                          std::to_string(min_frames));
}

std::string synth_category(int flights, int bucket) {
    return "f" + std::to_string(flights) + "s" + std::to_string(bucket);
}

std::vector<SynthVideo> generate_synthetic_with_detections(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<SynthVideo> videos;
    videos.reserve(static_cast<std::size_t>(config.num_videos));
    for (int i = 0; i < config.num_videos; ++i) videos.push_back(generate_one(config, seed, i));
    return videos;
}

std::vector<VideoRecord> generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    std::vector<VideoRecord> records;
    records.reserve(static_cast<std::size_t>(config.num_videos));
    for (SynthVideo& v : generate_synthetic_with_detections(config, seed)) records.push_back(std::move(v.record));
    return records;
}

} // namespace airtime
