#pragma once

#include <vector>

#include "personlab/field_grid.hpp"

namespace personlab {

/// Per-keypoint Hough score maps at the input grid resolution.
struct HoughMaps {
    ScoreGrid grids;         // K channels, f64 accumulators
    double disk_radius = 0;  // R, image pixels
};

/// A local maximum of a Hough channel, reported at its cell center.
struct SeedCandidate {
    Point2D position;       // image pixels
    int keypoint_type = 0;  // channel k
    double score = 0.0;
};

/// Every grid cell casts a vote of weight p_k * stride^2 / (pi R^2) at the
/// continuous position it points to (the aggregate of the stride^2 image
/// pixels the cell stands for, so mass is stride-invariant); votes splat
/// bilinearly onto the Hough grid and clamp to the border. Channels
/// accumulate independently (parallel).
HoughMaps accumulate_hough(const FieldGrid& heatmaps, const FieldGrid& short_offsets,
                           double disk_radius);

/// Local maxima above score_threshold within a square window of
/// (2*window_radius+1)^2 cells, sorted by descending score. A plateau of
/// equal values yields one seed: the first plateau cell in row-major scan
/// order. Score ties in the output break by (row, column, channel).
std::vector<SeedCandidate> extract_seeds(const HoughMaps& hough, double score_threshold,
                                         int window_radius = 1);

/// Snap each seed to its vote target: position += short offset sampled at the
/// seed. Recovers sub-cell accuracy lost to grid quantization before decoding.
void refine_seed_positions(std::vector<SeedCandidate>& seeds,
                           const FieldGrid& short_offsets);

namespace ref {
/// Gather-form O(cells^2) accumulator, kept serial as the testing oracle for
/// accumulate_hough.
HoughMaps accumulate_hough(const FieldGrid& heatmaps, const FieldGrid& short_offsets,
                           double disk_radius);
}  // namespace ref

}  // namespace personlab
