#include "personlab/hough.hpp"

#include <algorithm>
#include <stdexcept>

namespace personlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_inputs(const FieldGrid& heatmaps, const FieldGrid& short_offsets,
                  double disk_radius) {
    if (disk_radius <= 0.0)
        throw std::invalid_argument("accumulate_hough: disk radius must be positive");
    if (heatmaps.height != short_offsets.height || heatmaps.width != short_offsets.width ||
        heatmaps.stride != short_offsets.stride ||
        short_offsets.channels != 2 * heatmaps.channels)
        throw std::invalid_argument("accumulate_hough: heatmap/offset shape mismatch");
}

}  // namespace

HoughMaps accumulate_hough(const FieldGrid& heatmaps, const FieldGrid& short_offsets,
                           double disk_radius) {
    check_inputs(heatmaps, short_offsets, disk_radius);
    const int h = heatmaps.height, w = heatmaps.width, k = heatmaps.channels;
    // one cell aggregates the votes of its stride^2 image pixels, so the
    // accumulated mass is stride-invariant
    const double stride = heatmaps.stride;
    const double inv_area = stride * stride / (kPi * disk_radius * disk_radius);

    HoughMaps result;
    result.disk_radius = disk_radius;
    result.grids = ScoreGrid(h, w, k, heatmaps.stride);
    ScoreGrid& out = result.grids;

    // One accumulator per keypoint channel; channels never share cells.
    #pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double p = heatmaps.at(i, j, c);
                if (p == 0.0) continue;
                const Point2D src = heatmaps.cell_center(i, j);
                const Point2D target{src.x + short_offsets.at(i, j, 2 * c),
                                     src.y + short_offsets.at(i, j, 2 * c + 1)};
                splat_bilinear(out, c, target, p * inv_area);
            }
        }
    }
    return result;
}

std::vector<SeedCandidate> extract_seeds(const HoughMaps& hough, double score_threshold,
                                         int window_radius) {
    if (score_threshold < 0.0)
        throw std::invalid_argument("extract_seeds: threshold must be >= 0");
    const ScoreGrid& g = hough.grids;
    std::vector<SeedCandidate> seeds;

    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            for (int c = 0; c < g.channels; ++c) {
                const double v = g.at(i, j, c);
                if (v <= score_threshold) continue;
                bool is_max = true;
                for (int di = -window_radius; di <= window_radius && is_max; ++di) {
                    for (int dj = -window_radius; dj <= window_radius && is_max; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        const int ni = i + di, nj = j + dj;
                        if (ni < 0 || nj < 0 || ni >= g.height || nj >= g.width) continue;
                        const double nv = g.at(ni, nj, c);
                        if (nv > v) is_max = false;
                        // equal neighbor earlier in scan order claims the plateau
                        if (nv == v && (ni < i || (ni == i && nj < j))) is_max = false;
                    }
                }
                if (is_max) seeds.push_back({g.cell_center(i, j), c, v});
            }
        }
    }

    std::sort(seeds.begin(), seeds.end(), [&](const SeedCandidate& a, const SeedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.position.y != b.position.y) return a.position.y < b.position.y;
        if (a.position.x != b.position.x) return a.position.x < b.position.x;
        return a.keypoint_type < b.keypoint_type;
    });
    return seeds;
}

void refine_seed_positions(std::vector<SeedCandidate>& seeds,
                           const FieldGrid& short_offsets) {
    for (SeedCandidate& s : seeds) {
        const double dx = bilinear_sample(short_offsets, 2 * s.keypoint_type, s.position);
        const double dy = bilinear_sample(short_offsets, 2 * s.keypoint_type + 1, s.position);
        s.position.x += dx;
        s.position.y += dy;
    }
}

namespace ref {

HoughMaps accumulate_hough(const FieldGrid& heatmaps, const FieldGrid& short_offsets,
                           double disk_radius) {
    check_inputs(heatmaps, short_offsets, disk_radius);
    const int h = heatmaps.height, w = heatmaps.width, k = heatmaps.channels;
    // one cell aggregates the votes of its stride^2 image pixels, so the
    // accumulated mass is stride-invariant
    const double stride = heatmaps.stride;
    const double inv_area = stride * stride / (kPi * disk_radius * disk_radius);

    HoughMaps result;
    result.disk_radius = disk_radius;
    result.grids = ScoreGrid(h, w, k, heatmaps.stride);
    ScoreGrid& out = result.grids;

    for (int c = 0; c < k; ++c) {
        for (int ti = 0; ti < h; ++ti) {
            for (int tj = 0; tj < w; ++tj) {
                double acc = 0.0;
                for (int i = 0; i < h; ++i) {
                    for (int j = 0; j < w; ++j) {
                        const double p = heatmaps.at(i, j, c);
                        if (p == 0.0) continue;
                        const Point2D src = heatmaps.cell_center(i, j);
                        const Point2D target{src.x + short_offsets.at(i, j, 2 * c),
                                             src.y + short_offsets.at(i, j, 2 * c + 1)};
                        acc += p * inv_area * splat_weight(out, target, ti, tj);
                    }
                }
                out.at(ti, tj, c) = acc;
            }
        }
    }
    return result;
}

}  // namespace ref

}  // namespace personlab
