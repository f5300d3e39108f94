#pragma once

#include <string>
#include <vector>

#include "personlab/decoder.hpp"
#include "personlab/field_grid.hpp"
#include "personlab/hough.hpp"

namespace personlab {

/// Per-keypoint OKS falloff constants kappa_k.
struct OksParams {
    std::vector<double> kappas;

    /// COCO person-keypoint constants (2 * the standard per-keypoint sigmas).
    static OksParams coco();
};

/// Plain text, K lines of "keypoint_name value". Names must cover the COCO
/// set exactly once.
OksParams load_kappas(const std::string& path);

enum class ScoringMethod { Hough, ExpectedOks };
enum class NmsMethod { Hard, Soft };

struct ScoringConfig {
    ScoringMethod method = ScoringMethod::ExpectedOks;
    NmsMethod nms = NmsMethod::Soft;
    double hard_nms_oks_threshold = 0.5;
    double soft_nms_radius = 10.0;
};

/// sqrt of the tight keypoint bounding-box area, floored (default 1 px) so
/// degenerate instances never divide by zero downstream.
double instance_scale(const PoseInstance& instance, double floor = 1.0);

/// s_k = Hough score sampled bilinearly at each keypoint.
std::vector<double> score_keypoints_hough(const PoseInstance& instance,
                                          const HoughMaps& hough);

/// Expected-OKS: presence probability at the keypoint times the OKS kernel
/// averaged under the Hough mass normalized within the R-disk around it.
/// Zero disk mass scores zero.
std::vector<double> score_keypoints_expected_oks(const PoseInstance& instance,
                                                 const HoughMaps& hough,
                                                 const FieldGrid& heatmaps,
                                                 const OksParams& oks, double disk_radius);

/// OKS between two keypoint sets: mean over keypoints of
/// exp(-d_k^2 / (2 * scale^2 * kappa_k^2)) with scale^2 playing the area role.
double pose_oks(const std::vector<Point2D>& candidate, const std::vector<Point2D>& kept,
                double kept_scale, const OksParams& oks);

/// Descending-score sweep; a candidate is dropped when its OKS against any
/// kept instance (computed with the kept instance's scale) reaches the
/// threshold. Instances must carry keypoint scores; instance_score is set to
/// the mean keypoint score before sweeping.
std::vector<PoseInstance> hard_nms(std::vector<PoseInstance> instances, const OksParams& oks,
                                   double threshold);

/// Soft-NMS rescoring: a keypoint contributes its score only when no
/// higher-ranked instance holds its same-type keypoint within radius r.
/// Keeps every instance; output re-sorted by the final score.
std::vector<PoseInstance> soft_nms_rescore(std::vector<PoseInstance> instances,
                                           double radius);

/// The whole scoring stage: keypoint scores per the configured method, then
/// the configured NMS. Output is ranked by final instance score.
std::vector<PoseInstance> score_and_rank(std::vector<PoseInstance> instances,
                                         const HoughMaps& hough, const FieldGrid& heatmaps,
                                         const OksParams& oks, const ScoringConfig& config,
                                         double disk_radius);

}  // namespace personlab
