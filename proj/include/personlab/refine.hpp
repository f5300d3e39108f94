#pragma once

#include "personlab/field_grid.hpp"
#include "personlab/keypoints.hpp"

namespace personlab {

/// Recurrent refinement schedule. Mid-range offsets are refined by the
/// short-range field; long-range offsets first by themselves, then by the
/// short-range field.
struct RefinementConfig {
    int mid_steps_short = 2;
    int long_steps_self = 2;
    int long_steps_short = 2;
};

/// One refinement step per scheduled pass: for each cell x with current
/// relative offset o, x' = x + o, new offset = (x' + S_target(x')) - x,
/// S sampled bilinearly (clamped) per scalar channel. Directed edge (k, l)
/// refines against the target keypoint channel l.
FieldGrid refine_mid_offsets(const FieldGrid& mid_offsets, const FieldGrid& short_offsets,
                             const KinematicGraph& graph, const RefinementConfig& config);

/// Self steps sample the long-range field itself at x'; short steps then
/// sample the short-range field of the same keypoint channel.
FieldGrid refine_long_offsets(const FieldGrid& long_offsets, const FieldGrid& short_offsets,
                              const RefinementConfig& config);

namespace ref {
// Serial twins of the OpenMP kernels above; identical arithmetic per cell.
FieldGrid refine_mid_offsets(const FieldGrid& mid_offsets, const FieldGrid& short_offsets,
                             const KinematicGraph& graph, const RefinementConfig& config);
FieldGrid refine_long_offsets(const FieldGrid& long_offsets, const FieldGrid& short_offsets,
                              const RefinementConfig& config);
}  // namespace ref

}  // namespace personlab
