#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "personlab/container.hpp"
#include "personlab/field_grid.hpp"
#include "personlab/keypoints.hpp"

namespace personlab {

/// Declared ground truth for one person: K keypoints with visibility and a
/// simple polygon body mask.
struct ScenePerson {
    std::vector<Point2D> keypoints;
    std::vector<bool> visibility;
    std::vector<Point2D> mask_polygon;
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    std::vector<ScenePerson> persons;
    std::map<std::string, double> noise_sigma;  // field name -> Gaussian sigma
    std::uint64_t noise_seed = 0;
};

struct SceneParseError : std::runtime_error {
    std::string path;  // JSON field path, e.g. "persons[0].keypoints"
    SceneParseError(std::string field_path, const std::string& msg)
        : std::runtime_error("scene parse error at " + field_path + ": " + msg),
          path(std::move(field_path)) {}
};

/// Even-odd rule; boundary behavior follows the standard crossing test.
bool point_in_polygon(const std::vector<Point2D>& polygon, Point2D p);

/// Renders the ideal supervised targets for the scene at the given stride:
/// unit disks of radius R on keypoint heatmaps, short offsets to the closest
/// instance inside disks, mid offsets on source-keypoint disks along the
/// graph, long offsets on single-ownership mask cells, and the union
/// segmentation map. Per-field Gaussian noise (if any) is added last from a
/// seeded counter-based generator and is thread-count independent.
ModelOutputs render_outputs(const SceneSpec& scene, int stride, double disk_radius = 32.0,
                            const KinematicGraph* graph = nullptr);

SceneSpec load_scene(const std::string& path);
void save_scene(const SceneSpec& scene, const std::string& path);

SceneSpec scene_from_json_text(const std::string& text);
std::string scene_to_json_text(const SceneSpec& scene);

namespace ref {
// Serial twin of render_outputs.
ModelOutputs render_outputs(const SceneSpec& scene, int stride, double disk_radius = 32.0,
                            const KinematicGraph* graph = nullptr);
}  // namespace ref

}  // namespace personlab
