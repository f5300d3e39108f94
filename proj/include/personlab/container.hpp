#pragma once

#include <stdexcept>
#include <string>

#include "personlab/field_grid.hpp"

namespace personlab {

/// The five dense field groups one image worth of network (or oracle) output.
/// Offset values are stored in image-pixel units at every stride.
struct ModelOutputs {
    FieldGrid heatmaps;       // K channels
    FieldGrid short_offsets;  // 2K channels (x, y per keypoint)
    FieldGrid mid_offsets;    // 4(K-1) channels (x, y per directed edge)
    FieldGrid long_offsets;   // 2K channels
    FieldGrid seg_prob;       // 1 channel
    int image_height = 0;
    int image_width = 0;

    int num_keypoints() const { return heatmaps.channels; }
    int grid_height() const { return heatmaps.height; }
    int grid_width() const { return heatmaps.width; }
    int stride() const { return heatmaps.stride; }
};

struct ParseError : std::runtime_error {
    enum class Kind { BadMagic, VersionMismatch, Truncated, DimensionMismatch, Io };
    Kind kind;
    ParseError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Throws ParseError(DimensionMismatch) if the five grids disagree on shape,
/// stride, or the channel-count relations implied by K.
void validate_outputs(const ModelOutputs& outputs);

// PLFD binary container (little-endian). Header: magic "PLFD", version u32=1,
// K, image_height, image_width, stride, grid_height, grid_width (all u32),
// then five blocks in fixed order (heatmaps, short, mid, long, seg), each a
// channel-count u32 followed by grid_height*grid_width*channels f32 values,
// row-major, channel-minor.
void save_container(const ModelOutputs& outputs, const std::string& path);
ModelOutputs load_container(const std::string& path);

}  // namespace personlab
