#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "personlab/container.hpp"
#include "personlab/decoder.hpp"
#include "personlab/keypoints.hpp"
#include "personlab/segmentation.hpp"

namespace personlab {

/// Interleaved 8-bit RGB image.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // 3 * height * width

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), pixels(3u * h * w, 0) {}
    std::uint8_t* at(int y, int x) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
};

/// Minimal PNG writers (zlib-deflated, filter 0).
void write_png(const RgbImage& image, const std::string& path);
/// 8-bit grayscale PNG of a mask, 0/255 per pixel; the per-instance bitmap
/// export format.
void write_mask_png(const MaskGrid& mask, const std::string& path);

/// Grayscale segmentation backdrop, tinted instance masks, skeleton overlays.
RgbImage render_overlay(const ModelOutputs& outputs, const std::vector<PoseInstance>& instances,
                        const std::vector<MaskGrid>& image_masks, const KinematicGraph& graph);

}  // namespace personlab
