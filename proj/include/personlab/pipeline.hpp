#pragma once

#include <optional>
#include <string>
#include <vector>

#include "personlab/container.hpp"
#include "personlab/decoder.hpp"
#include "personlab/eval.hpp"
#include "personlab/hough.hpp"
#include "personlab/refine.hpp"
#include "personlab/scoring.hpp"
#include "personlab/segmentation.hpp"
#include "personlab/synth.hpp"

namespace personlab {

/// Full inference configuration. Defaults reproduce the reference setup:
/// R = 32 px disks, 0.01 seed threshold, r = 10 px NMS radius, Expected-OKS
/// scoring with soft-NMS, 0.5 segmentation threshold, t = 0.25 embedding
/// distance threshold, two refinement passes per schedule slot, 20 proposals.
struct PipelineConfig {
    double disk_radius = 32.0;
    double seed_threshold = 0.01;
    double nms_radius = 10.0;
    ScoringMethod scoring = ScoringMethod::ExpectedOks;
    NmsMethod nms = NmsMethod::Soft;
    double hard_nms_oks_threshold = 0.5;
    double seg_threshold = 0.5;
    double dist_threshold = 0.25;
    RefinementConfig refinement;
    int proposal_budget = 20;
    int seed_window_radius = 1;  // local-maximum window, cells
    double snap_radius = 0.0;    // optional Hough snapping of propagated keypoints
    std::string graph_file;      // empty = built-in COCO tree
    std::string kappa_file;      // empty = built-in COCO constants

    std::string to_json_text() const;
};

struct PipelineResult {
    std::vector<PoseInstance> instances;  // scored, NMS'd, budget-truncated
    InstanceMasks masks;                  // grid-resolution assignment
    HoughMaps hough;
};

/// refine offsets -> Hough -> seeds -> greedy decode -> score -> NMS ->
/// budget -> pixel assignment. Deterministic for fixed inputs and config.
PipelineResult run_pipeline(const ModelOutputs& outputs, const PipelineConfig& config,
                            const KinematicGraph& graph, const OksParams& kappas);

/// Pipeline result as COCO-style detections with image-resolution RLE masks.
std::vector<Detection> detections_from_result(const ModelOutputs& outputs,
                                              const PipelineResult& result,
                                              std::int64_t image_id);

/// Scene ground truth as evaluator annotations: keypoints with visibility,
/// image-resolution mask RLE, and mask-pixel area.
std::vector<GroundTruthAnnotation> ground_truth_from_scene(const SceneSpec& scene,
                                                           std::int64_t image_id = 0);

// CLI entry points. Errors print to stderr; the return value is the process
// exit code: 0 success, 1 usage, 2 I/O, 3 parse.
int cmd_decode(const std::string& input_path, const std::string& out_json,
               const std::string& masks_dir, const std::string& render_path,
               const PipelineConfig& config, std::int64_t image_id = 0);
int cmd_synth(const std::string& scene_path, int stride, const std::string& out_container,
              double disk_radius = 32.0, const std::string& gt_out = "");
int cmd_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& task, bool json_output, int max_detections,
             const std::string& kappa_file);
int cmd_render(const std::string& input_path, const std::string& out_png,
               const PipelineConfig& config);

}  // namespace personlab
