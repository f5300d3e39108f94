#include "personlab/decoder.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace personlab {

namespace {

Point2D snap_to_hough(const HoughMaps& hough, int channel, Point2D p, double radius) {
    const ScoreGrid& g = hough.grids;
    double best = bilinear_sample(g, channel, p);
    Point2D best_pos = p;
    const int r_cells = static_cast<int>(radius / g.stride) + 1;
    const int ci = static_cast<int>(p.y / g.stride - 0.5);
    const int cj = static_cast<int>(p.x / g.stride - 0.5);
    for (int i = ci - r_cells; i <= ci + r_cells + 1; ++i) {
        for (int j = cj - r_cells; j <= cj + r_cells + 1; ++j) {
            if (i < 0 || j < 0 || i >= g.height || j >= g.width) continue;
            const Point2D c = g.cell_center(i, j);
            if (norm(c - p) > radius) continue;
            const double v = g.at(i, j, channel);
            if (v > best) {
                best = v;
                best_pos = c;
            }
        }
    }
    return best_pos;
}

}  // namespace

std::vector<PoseInstance> greedy_decode(const std::vector<SeedCandidate>& seeds,
                                        const HoughMaps& hough,
                                        const FieldGrid& refined_mid_offsets,
                                        const KinematicGraph& graph, double nms_radius,
                                        double snap_radius) {
    if (nms_radius <= 0.0)
        throw std::invalid_argument("greedy_decode: nms radius must be positive");
    const int k = graph.num_keypoints;
    if (refined_mid_offsets.channels != graph.num_mid_channels())
        throw std::invalid_argument("greedy_decode: mid-offset channels do not match graph");

    // Seeds arrive sorted; a max-heap keeps the contract explicit when they are not.
    auto worse = [](const SeedCandidate& a, const SeedCandidate& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.position.y != b.position.y) return a.position.y > b.position.y;
        if (a.position.x != b.position.x) return a.position.x > b.position.x;
        return a.keypoint_type > b.keypoint_type;
    };
    std::priority_queue<SeedCandidate, std::vector<SeedCandidate>, decltype(worse)> queue(
        worse, seeds);

    // adjacency over directed edges, filled once
    std::vector<std::vector<int>> out_edges(k);
    for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e)
        out_edges[graph.edges[e].from].push_back(e);

    std::vector<PoseInstance> instances;
    std::vector<int> bfs;
    bfs.reserve(k);

    while (!queue.empty()) {
        const SeedCandidate seed = queue.top();
        queue.pop();

        bool rejected = false;
        for (const PoseInstance& inst : instances) {
            if (norm(inst.keypoints[seed.keypoint_type] - seed.position) <= nms_radius) {
                rejected = true;
                break;
            }
        }
        if (rejected) continue;

        PoseInstance inst;
        inst.keypoints.assign(k, Point2D{});
        inst.keypoint_scores.assign(k, 0.0);
        inst.keypoint_present.assign(k, true);
        inst.seed_type = seed.keypoint_type;
        inst.decode_order = static_cast<int>(instances.size());
        inst.keypoints[seed.keypoint_type] = seed.position;

        std::vector<char> placed(k, 0);
        placed[seed.keypoint_type] = 1;
        bfs.clear();
        bfs.push_back(seed.keypoint_type);
        for (std::size_t head = 0; head < bfs.size(); ++head) {
            const int from = bfs[head];
            const Point2D src = inst.keypoints[from];
            for (int e : out_edges[from]) {
                const int to = graph.edges[e].to;
                if (placed[to]) continue;
                Point2D dst{src.x + bilinear_sample(refined_mid_offsets, 2 * e, src),
                            src.y + bilinear_sample(refined_mid_offsets, 2 * e + 1, src)};
                if (snap_radius > 0.0)
                    dst = snap_to_hough(hough, to, dst, snap_radius);
                inst.keypoints[to] = dst;
                placed[to] = 1;
                bfs.push_back(to);
            }
        }
        instances.push_back(std::move(inst));
    }
    return instances;
}

}  // namespace personlab
