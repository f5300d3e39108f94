#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "personlab/decoder.hpp"
#include "personlab/field_grid.hpp"

namespace personlab {

/// Per-pixel geometric embedding: 2K channels of absolute predicted keypoint
/// positions, G_k(x) = x + L_k(x).
struct EmbeddingField {
    ScoreGrid grid;
};

/// Built from refined long-range offsets; cell centers supply x.
EmbeddingField build_embedding(const FieldGrid& refined_long_offsets);

using MaskGrid = Grid<std::uint8_t>;

/// Non-exclusive pixel-to-instance assignment at grid resolution. A person
/// pixel may belong to several instances or to none.
struct InstanceMasks {
    MaskGrid person_mask;                    // p_S >= threshold
    std::vector<MaskGrid> instance_cells;    // one grid per instance
    Grid<std::int32_t> label_map;            // argmin-distance instance, -1 = none
    std::uint64_t distance_evaluations = 0;  // exactly person_pixels * instances
};

MaskGrid person_mask(const FieldGrid& seg_prob, double threshold = 0.5);

/// Embedding distance: presence-weighted mean keypoint
/// discrepancy, normalized by the instance scale. Returns +infinity when all
/// presence weights are zero.
double embedding_distance(std::span<const double> pixel_embedding,
                          const PoseInstance& instance, const FieldGrid& heatmaps);

/// Core form with precomputed weights and scale; weights[k] multiplies the
/// k-th keypoint discrepancy.
double embedding_distance(std::span<const double> pixel_embedding,
                          std::span<const Point2D> keypoints,
                          std::span<const double> weights, double scale);

/// Computes the distance of every person pixel against every instance
/// (exactly N_S * M evaluations) and records every instance within
/// dist_threshold. Parallel over pixel rows.
InstanceMasks assign_pixels(const MaskGrid& mask, const EmbeddingField& embedding,
                            const std::vector<PoseInstance>& instances,
                            const FieldGrid& heatmaps, double dist_threshold = 0.25);

/// Nearest-neighbor upsampling of the cell-level masks to image resolution.
std::vector<MaskGrid> masks_to_image(const InstanceMasks& masks, int image_height,
                                     int image_width);

namespace ref {
// Serial twin of assign_pixels.
InstanceMasks assign_pixels(const MaskGrid& mask, const EmbeddingField& embedding,
                            const std::vector<PoseInstance>& instances,
                            const FieldGrid& heatmaps, double dist_threshold = 0.25);
}  // namespace ref

}  // namespace personlab
