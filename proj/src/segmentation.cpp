#include "personlab/segmentation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "personlab/scoring.hpp"

namespace personlab {

EmbeddingField build_embedding(const FieldGrid& long_offsets) {
    ScoreGrid g(long_offsets.height, long_offsets.width, long_offsets.channels,
                long_offsets.stride);
    const int k = long_offsets.channels / 2;
    #pragma omp parallel for schedule(static)
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            const Point2D x = g.cell_center(i, j);
            for (int c = 0; c < k; ++c) {
                g.at(i, j, 2 * c) = x.x + long_offsets.at(i, j, 2 * c);
                g.at(i, j, 2 * c + 1) = x.y + long_offsets.at(i, j, 2 * c + 1);
            }
        }
    }
    return EmbeddingField{std::move(g)};
}

MaskGrid person_mask(const FieldGrid& seg_prob, double threshold) {
    MaskGrid m(seg_prob.height, seg_prob.width, 1, seg_prob.stride);
    for (int i = 0; i < m.height; ++i)
        for (int j = 0; j < m.width; ++j)
            m.at(i, j, 0) = seg_prob.at(i, j, 0) >= threshold ? 1 : 0;
    return m;
}

double embedding_distance(std::span<const double> pixel_embedding,
                          std::span<const Point2D> keypoints,
                          std::span<const double> weights, double scale) {
    double weight_sum = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < keypoints.size(); ++k) {
        const double dx = pixel_embedding[2 * k] - keypoints[k].x;
        const double dy = pixel_embedding[2 * k + 1] - keypoints[k].y;
        sum += weights[k] * std::sqrt(dx * dx + dy * dy) / scale;
        weight_sum += weights[k];
    }
    if (weight_sum <= 0.0) return std::numeric_limits<double>::infinity();
    return sum / weight_sum;
}

double embedding_distance(std::span<const double> pixel_embedding,
                          const PoseInstance& instance, const FieldGrid& heatmaps) {
    std::vector<double> weights(instance.keypoints.size());
    for (std::size_t k = 0; k < weights.size(); ++k)
        weights[k] = bilinear_sample(heatmaps, static_cast<int>(k), instance.keypoints[k]);
    return embedding_distance(pixel_embedding, instance.keypoints, weights,
                              instance_scale(instance));
}

namespace {

template <bool Parallel>
InstanceMasks assign_impl(const MaskGrid& mask, const EmbeddingField& embedding,
                          const std::vector<PoseInstance>& instances,
                          const FieldGrid& heatmaps, double dist_threshold) {
    const ScoreGrid& emb = embedding.grid;
    if (emb.height != mask.height || emb.width != mask.width)
        throw std::invalid_argument("assign_pixels: mask/embedding shape mismatch");
    const int m = static_cast<int>(instances.size());
    const int k = emb.channels / 2;

    // presence weights and scale per instance, computed once
    std::vector<std::vector<double>> weights(m);
    std::vector<double> scales(m);
    for (int j = 0; j < m; ++j) {
        weights[j].resize(k);
        for (int c = 0; c < k; ++c)
            weights[j][static_cast<std::size_t>(c)] =
                bilinear_sample(heatmaps, c, instances[j].keypoints[c]);
        scales[j] = instance_scale(instances[j]);
    }

    InstanceMasks out;
    out.person_mask = mask;
    out.instance_cells.assign(m, MaskGrid(mask.height, mask.width, 1, mask.stride));
    out.label_map = Grid<std::int32_t>(mask.height, mask.width, 1, mask.stride, -1);

    std::uint64_t evaluations = 0;
    #pragma omp parallel for schedule(static) reduction(+ : evaluations) if (Parallel)
    for (int i = 0; i < mask.height; ++i) {
        for (int jj = 0; jj < mask.width; ++jj) {
            if (!mask.at(i, jj, 0)) continue;
            const std::span<const double> pixel_emb{
                emb.data.data() + emb.index(i, jj, 0), static_cast<std::size_t>(emb.channels)};
            double best = std::numeric_limits<double>::infinity();
            std::int32_t best_j = -1;
            for (int j = 0; j < m; ++j) {
                const double d = embedding_distance(pixel_emb, instances[j].keypoints,
                                                    weights[j], scales[j]);
                ++evaluations;
                if (d <= dist_threshold) out.instance_cells[j].at(i, jj, 0) = 1;
                if (d < best) {
                    best = d;
                    best_j = static_cast<std::int32_t>(j);
                }
            }
            if (best <= dist_threshold) out.label_map.at(i, jj, 0) = best_j;
        }
    }
    out.distance_evaluations = evaluations;
    return out;
}

}  // namespace

InstanceMasks assign_pixels(const MaskGrid& mask, const EmbeddingField& embedding,
                            const std::vector<PoseInstance>& instances,
                            const FieldGrid& heatmaps, double dist_threshold) {
    return assign_impl<true>(mask, embedding, instances, heatmaps, dist_threshold);
}

std::vector<MaskGrid> masks_to_image(const InstanceMasks& masks, int image_height,
                                     int image_width) {
    std::vector<MaskGrid> out;
    out.reserve(masks.instance_cells.size());
    for (const MaskGrid& cells : masks.instance_cells) {
        MaskGrid img(image_height, image_width, 1, 1);
        const int s = cells.stride;
        for (int y = 0; y < image_height; ++y) {
            const int ci = std::min(y / s, cells.height - 1);
            for (int x = 0; x < image_width; ++x) {
                const int cj = std::min(x / s, cells.width - 1);
                img.at(y, x, 0) = cells.at(ci, cj, 0);
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

namespace ref {

InstanceMasks assign_pixels(const MaskGrid& mask, const EmbeddingField& embedding,
                            const std::vector<PoseInstance>& instances,
                            const FieldGrid& heatmaps, double dist_threshold) {
    return assign_impl<false>(mask, embedding, instances, heatmaps, dist_threshold);
}

}  // namespace ref

}  // namespace personlab
