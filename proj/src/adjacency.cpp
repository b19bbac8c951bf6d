#include <cmath>

#include "airtime/embedding.hpp"
#include "airtime/error.hpp"

namespace airtime {

nn::Tensor normalized_adjacency() {
    nn::Tensor a(kNumJoints, kNumJoints);
    for (const auto& e : kSkeletonEdges) {
        a(static_cast<std::size_t>(e[0]), static_cast<std::size_t>(e[1])) = 1.0;
        a(static_cast<std::size_t>(e[1]), static_cast<std::size_t>(e[0])) = 1.0;
    }
    for (std::size_t i = 0; i < kNumJoints; ++i) a(i, i) = 1.0;
    for (std::size_t r = 0; r < kNumJoints; ++r) {
        double deg = 0.0;
        for (std::size_t c = 0; c < kNumJoints; ++c) deg += a(r, c);
        for (std::size_t c = 0; c < kNumJoints; ++c) a(r, c) /= deg;
    }
    return a;
}

Vec2 gravity_center(const Pose& frame) {
    Vec2 c;
    for (const Vec2& p : frame) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= kNumJoints;
    c.y /= kNumJoints;
    return c;
}

PartitionedAdjacency build_partitions(const Pose& frame) {
    static const nn::Tensor norm = normalized_adjacency();

    const Vec2 center = gravity_center(frame);
    std::array<double, kNumJoints> dist;
    for (std::size_t j = 0; j < kNumJoints; ++j)
        dist[j] = std::hypot(frame[j].x - center.x, frame[j].y - center.y);

    PartitionedAdjacency parts;
    for (nn::Tensor& s : parts.subset) s = nn::Tensor(kNumJoints, kNumJoints);
    for (std::size_t r = 0; r < kNumJoints; ++r) {
        for (std::size_t n = 0; n < kNumJoints; ++n) {
            const double w = norm(r, n);
            if (w == 0.0) continue;
            int which = 0; // root: equal distance, including every self-loop
            if (dist[n] < dist[r]) which = 1; // centripetal: nearer the center
            else if (dist[n] > dist[r]) which = 2; // centrifugal: farther out
            parts.subset[static_cast<std::size_t>(which)](r, n) = w;
        }
    }
    return parts;
}

SequencePartitions build_sequence_partitions(const std::vector<Pose>& frames) {
    std::array<std::vector<nn::Tensor>, 3> stacks;
    for (auto& s : stacks) s.reserve(frames.size());
    for (const Pose& frame : frames) {
        PartitionedAdjacency p = build_partitions(frame);
        for (std::size_t k = 0; k < 3; ++k) stacks[k].push_back(std::move(p.subset[k]));
    }
    SequencePartitions parts;
    parts.length = frames.size();
    for (std::size_t k = 0; k < 3; ++k)
        parts.subset[k] = std::make_shared<const std::vector<nn::Tensor>>(std::move(stacks[k]));
    return parts;
}

nn::Tensor stack_joint_features(const std::vector<Pose>& frames) {
    nn::Tensor x(frames.size() * kNumJoints, 2);
    std::size_t r = 0;
    for (const Pose& frame : frames) {
        for (const Vec2& p : frame) {
            x(r, 0) = p.x;
            x(r, 1) = p.y;
            ++r;
        }
    }
    return x;
}

} // namespace airtime
