#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "personlab/field_grid.hpp"
#include "personlab/scoring.hpp"
#include "personlab/segmentation.hpp"

namespace personlab {

/// Column-major run-length coding, alternating runs starting with zeros.
struct Rle {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;

    std::uint64_t area() const;
};

Rle rle_encode(const MaskGrid& mask);
/// RLE of the nearest-neighbor upsampling of a cell mask to image resolution,
/// without materializing the image-resolution bitmap.
Rle rle_encode_upsampled(const MaskGrid& cells, int image_height, int image_width);
MaskGrid rle_decode(const Rle& rle);
/// Intersection-over-union on the run lists; iscrowd divides by the
/// detection area instead of the union.
double rle_iou(const Rle& det, const Rle& gt, bool iscrowd = false);

struct Detection {
    std::int64_t image_id = 0;
    std::vector<Point2D> keypoints;
    std::vector<double> keypoint_scores;
    double score = 0.0;
    Rle mask;  // empty counts = no mask
};

struct GroundTruthAnnotation {
    std::int64_t image_id = 0;
    std::vector<Point2D> keypoints;
    std::vector<int> visibility;  // 0 unlabeled, 1 labeled occluded, 2 labeled visible
    double area = 0.0;
    Rle mask;
    bool iscrowd = false;

    int labeled_count() const;
};

/// COCO object keypoint similarity: mean over labeled keypoints of
/// exp(-d_k^2 / (2 * area * kappa_k^2)).
double oks(const Detection& det, const GroundTruthAnnotation& gt, const OksParams& kappas);

struct ApSummary {
    double ap = 0.0;        // mean over thresholds
    double ap50 = 0.0;
    double ap75 = 0.0;
    double ap_small = -1.0; // mask task only; -1 when the bucket is empty
    double ap_medium = -1.0;
    double ap_large = -1.0;
    double ar = 0.0;
    double ar50 = 0.0;
    double ar75 = 0.0;
    double ar_small = -1.0;
    double ar_medium = -1.0;
    double ar_large = -1.0;
};

struct EvalConfig {
    std::vector<double> thresholds;  // defaults to 0.50:0.05:0.95
    int max_detections = 20;         // per-image proposal budget
    OksParams kappas = OksParams::coco();

    EvalConfig();
};

/// Greedy per-image matching by descending score, 101-point interpolated AP.
/// Crowd annotations are ignore regions. Size buckets follow COCO areas.
ApSummary keypoint_ap(const std::vector<GroundTruthAnnotation>& gts,
                      const std::vector<Detection>& dets, const EvalConfig& config = {});

ApSummary mask_ap(const std::vector<GroundTruthAnnotation>& gts,
                  const std::vector<Detection>& dets, const EvalConfig& config = {});

// Detection/ground-truth JSON, COCO results schema.
std::vector<Detection> detections_from_json_text(const std::string& text);
std::string detections_to_json_text(const std::vector<Detection>& dets);
std::vector<GroundTruthAnnotation> ground_truth_from_json_text(const std::string& text);
std::string ground_truth_to_json_text(const std::vector<GroundTruthAnnotation>& gts);

std::vector<Detection> load_detections(const std::string& path);
void save_detections(const std::vector<Detection>& dets, const std::string& path);
std::vector<GroundTruthAnnotation> load_ground_truth(const std::string& path);
void save_ground_truth(const std::vector<GroundTruthAnnotation>& gts, const std::string& path);

}  // namespace personlab
