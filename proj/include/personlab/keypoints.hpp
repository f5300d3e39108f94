#pragma once

#include <array>
#include <string>
#include <vector>

namespace personlab {

// COCO person keypoint set.
constexpr int kCocoKeypoints = 17;

const std::array<std::string, kCocoKeypoints>& coco_keypoint_names();

/// Index of a named keypoint, -1 if unknown.
int keypoint_index(const std::string& name);

/// Directed spanning tree over the K keypoint types. Directed edge e owns
/// mid-offset channels 2e and 2e+1; every edge has its reverse present.
struct KinematicGraph {
    struct Edge {
        int from = 0;
        int to = 0;
    };
    int num_keypoints = 0;
    std::vector<Edge> edges;  // edge index == channel pair index

    int num_mid_channels() const { return 2 * static_cast<int>(edges.size()); }
    /// Directed edge index for (from, to), -1 if absent.
    int edge_index(int from, int to) const;
    /// Throws std::invalid_argument unless the undirected support is a
    /// spanning tree with both directions present per edge.
    void validate() const;
};

/// The 16-edge COCO tree (both directions per undirected edge, 32 directed).
KinematicGraph default_coco_graph();

/// Plain-text graph file: one "name_a name_b" undirected edge per line,
/// '#' comments allowed. Names are the COCO keypoint names.
KinematicGraph load_graph(const std::string& path);

}  // namespace personlab
