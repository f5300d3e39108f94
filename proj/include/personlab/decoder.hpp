#pragma once

#include <vector>

#include "personlab/field_grid.hpp"
#include "personlab/hough.hpp"
#include "personlab/keypoints.hpp"

namespace personlab {

/// One decoded person: all K keypoint positions are always populated; scores
/// are attached by the scoring stage.
struct PoseInstance {
    std::vector<Point2D> keypoints;      // K positions, image pixels
    std::vector<double> keypoint_scores; // K, in [0,1]
    std::vector<bool> keypoint_present;  // always all true after decoding
    double instance_score = 0.0;         // mean keypoint score, then final NMS score
    int seed_type = -1;                  // keypoint type the instance started from
    int decode_order = -1;               // position in the greedy sweep
};

/// Greedy grouping: pop seeds in descending score order; reject a seed of
/// type k whose position lies within nms_radius of the type-k keypoint of an
/// already decoded instance; otherwise start an instance there and fill the
/// remaining keypoints breadth-first along the graph, each hop sampling the
/// refined mid-range offsets bilinearly at the already-placed endpoint.
///
/// If snap_radius > 0, each propagated keypoint additionally moves to the
/// best Hough cell center within that radius when it beats the local score.
std::vector<PoseInstance> greedy_decode(const std::vector<SeedCandidate>& seeds,
                                        const HoughMaps& hough,
                                        const FieldGrid& refined_mid_offsets,
                                        const KinematicGraph& graph, double nms_radius,
                                        double snap_radius = 0.0);

}  // namespace personlab
