#include "personlab/refine.hpp"

#include <stdexcept>
#include <utility>

namespace personlab {

namespace {

// new_offset(x) = (x' + F_sample(x')) - x with x' = x + old_offset(x).
// Reads `from`, writes `to`; `sample_field` supplies the two scalar channels
// (2*sc, 2*sc+1) to sample at x'.
template <bool Parallel>
void refine_pass(const FieldGrid& from, FieldGrid& to, const FieldGrid& sample_field,
                 int channel_pair, int sample_pair) {
    const int h = from.height, w = from.width;
    const int cx = 2 * channel_pair, cy = 2 * channel_pair + 1;
    const int sx = 2 * sample_pair, sy = 2 * sample_pair + 1;

    #pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const Point2D x = from.cell_center(i, j);
            const Point2D xp{x.x + from.at(i, j, cx), x.y + from.at(i, j, cy)};
            const double ox = xp.x + bilinear_sample(sample_field, sx, xp) - x.x;
            const double oy = xp.y + bilinear_sample(sample_field, sy, xp) - x.y;
            to.at(i, j, cx) = static_cast<float>(ox);
            to.at(i, j, cy) = static_cast<float>(oy);
        }
    }
}

template <bool Parallel>
FieldGrid refine_mid_impl(const FieldGrid& mid, const FieldGrid& short_offsets,
                          const KinematicGraph& graph, const RefinementConfig& config) {
    if (mid.channels != graph.num_mid_channels())
        throw std::invalid_argument("refine_mid_offsets: channel count does not match graph");
    FieldGrid cur = mid;
    if (config.mid_steps_short <= 0) return cur;
    FieldGrid next = mid;
    for (int step = 0; step < config.mid_steps_short; ++step) {
        for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e)
            refine_pass<Parallel>(cur, next, short_offsets, e, graph.edges[e].to);
        std::swap(cur, next);
    }
    return cur;
}

template <bool Parallel>
FieldGrid refine_long_impl(const FieldGrid& long_offsets, const FieldGrid& short_offsets,
                           const RefinementConfig& config) {
    const int k = long_offsets.channels / 2;
    FieldGrid cur = long_offsets;
    if (config.long_steps_self <= 0 && config.long_steps_short <= 0) return cur;
    FieldGrid next = long_offsets;
    for (int step = 0; step < config.long_steps_self; ++step) {
        for (int c = 0; c < k; ++c) refine_pass<Parallel>(cur, next, cur, c, c);
        std::swap(cur, next);
    }
    for (int step = 0; step < config.long_steps_short; ++step) {
        for (int c = 0; c < k; ++c) refine_pass<Parallel>(cur, next, short_offsets, c, c);
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace

FieldGrid refine_mid_offsets(const FieldGrid& mid_offsets, const FieldGrid& short_offsets,
                             const KinematicGraph& graph, const RefinementConfig& config) {
    return refine_mid_impl<true>(mid_offsets, short_offsets, graph, config);
}

FieldGrid refine_long_offsets(const FieldGrid& long_offsets, const FieldGrid& short_offsets,
                              const RefinementConfig& config) {
    return refine_long_impl<true>(long_offsets, short_offsets, config);
}

namespace ref {

FieldGrid refine_mid_offsets(const FieldGrid& mid_offsets, const FieldGrid& short_offsets,
                             const KinematicGraph& graph, const RefinementConfig& config) {
    return refine_mid_impl<false>(mid_offsets, short_offsets, graph, config);
}

FieldGrid refine_long_offsets(const FieldGrid& long_offsets, const FieldGrid& short_offsets,
                              const RefinementConfig& config) {
    return refine_long_impl<false>(long_offsets, short_offsets, config);
}

}  // namespace ref

}  // namespace personlab
