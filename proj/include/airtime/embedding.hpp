#ifndef AIRTIME_EMBEDDING_HPP
#define AIRTIME_EMBEDDING_HPP

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "airtime/pose.hpp"
#include "airtime/tensor.hpp"

namespace airtime {

/// The 19 anatomical bones of the COCO 17-joint skeleton.
inline constexpr std::array<std::array<int, 2>, 19> kSkeletonEdges = {{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
    {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
    {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6},
}};

/// Row-normalized augmented adjacency of the skeleton: D^-1 (A + I).
nn::Tensor normalized_adjacency();

/// Mean of the 17 joint coordinates.
Vec2 gravity_center(const Pose& frame);

/// Pose-dependent split of the normalized augmented adjacency into the
/// root / centripetal / centrifugal neighbor subsets. A neighbor n of
/// root r lands in subset 0 when its distance to the gravity center
/// equals the root's (always true for self-loops), 1 when it is nearer,
/// 2 when it is farther. The three matrices sum to normalized_adjacency().
struct PartitionedAdjacency {
    std::array<nn::Tensor, 3> subset;
};
PartitionedAdjacency build_partitions(const Pose& frame);

/// Per-frame partition matrices for a whole sequence, grouped by subset
/// so each subset forms one block-diagonal operator. Built once per video
/// and reused across epochs.
struct SequencePartitions {
    std::array<std::shared_ptr<const std::vector<nn::Tensor>>, 3> subset;
    std::size_t length = 0;
};
SequencePartitions build_sequence_partitions(const std::vector<Pose>& frames);

/// Joint coordinates stacked as one [T*17, 2] feature matrix.
nn::Tensor stack_joint_features(const std::vector<Pose>& frames);

struct EmbeddingConfig {
    int width = 64;         // H, frame embedding width
    int gcn_hidden = 16;    // channels between graph-conv layers
    int gcn_layers = 2;
    int provider_width = 16; // width of externally supplied embeddings

    void validate() const;
};

/// One graph-conv layer: a weight matrix per partition subset plus a bias.
struct GcnLayer {
    std::array<nn::Var, 3> weight; // each [C_in, C_out]
    nn::Var bias;                  // [1, C_out]
};

/// Stacked joint features [T*17, C0] -> frame embeddings [T, C_out of the
/// last layer]: per layer sum over subsets of (subset adjacency x features
/// x weight) + bias, ReLU between layers, then mean over the 17 joints.
nn::Var gcn_forward(const SequencePartitions& parts, const nn::Var& x, const std::vector<GcnLayer>& layers);

/// Sinusoidal positional encoding: PE(t,2k) = sin(t / 10000^(2k/width)),
/// PE(t,2k+1) = cos(t / 10000^(2k/width)). Throws ConfigError on odd width.
nn::Tensor positional_encoding(std::size_t length, int width);

/// Externally computed per-frame embeddings, returned as a frozen leaf.
/// Throws DataError when the table is not [length, width].
nn::Var fixed_embedding(const nn::Tensor& table, std::size_t length, int width);

} // namespace airtime

#endif
