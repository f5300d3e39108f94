// The OpenMP kernels must agree with their serial reference twins: bitwise
// where the arithmetic is identical per cell, and to accumulator tolerance
// for the Hough scatter/gather pair.

#include <random>

#include <doctest.h>

#include "personlab/hough.hpp"
#include "personlab/refine.hpp"
#include "personlab/segmentation.hpp"
#include "personlab/synth.hpp"
#include "support/test_scenes.hpp"

using namespace personlab;

TEST_SUITE("parallel-parity") {

TEST_CASE("hough accumulation agrees across strides and channel counts") {
    std::mt19937 rng(811);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::uniform_real_distribution<float> off(-60.0f, 60.0f);
    for (int stride : {1, 8, 16, 32}) {
        FieldGrid heat(12, 10, 3, stride);
        FieldGrid offsets(12, 10, 6, stride);
        for (float& v : heat.data) v = unit(rng);
        for (float& v : offsets.data) v = off(rng);
        const HoughMaps fast = accumulate_hough(heat, offsets, 32.0);
        const HoughMaps slow = ref::accumulate_hough(heat, offsets, 32.0);
        for (std::size_t i = 0; i < fast.grids.data.size(); ++i)
            CHECK(std::abs(fast.grids.data[i] - slow.grids.data[i]) <= 1e-9);
    }
}

TEST_CASE("refinement kernels are bitwise identical to the serial reference") {
    std::mt19937 rng(821);
    const SceneSpec scene = testsupport::separated_scene(rng, 2, 3);
    const ModelOutputs out = render_outputs(scene, 8);
    const KinematicGraph graph = default_coco_graph();
    const RefinementConfig config;

    CHECK(refine_mid_offsets(out.mid_offsets, out.short_offsets, graph, config).data ==
          ref::refine_mid_offsets(out.mid_offsets, out.short_offsets, graph, config).data);
    CHECK(refine_long_offsets(out.long_offsets, out.short_offsets, config).data ==
          ref::refine_long_offsets(out.long_offsets, out.short_offsets, config).data);
}

TEST_CASE("pixel assignment is identical to the serial reference") {
    std::mt19937 rng(823);
    const SceneSpec scene = testsupport::separated_scene(rng, 2, 4);
    const ModelOutputs out = render_outputs(scene, 8);
    std::vector<PoseInstance> instances;
    for (const auto& person : scene.persons) {
        PoseInstance inst;
        inst.keypoints = person.keypoints;
        inst.keypoint_scores.assign(person.keypoints.size(), 1.0);
        inst.keypoint_present.assign(person.keypoints.size(), true);
        instances.push_back(std::move(inst));
    }
    const MaskGrid mask = person_mask(out.seg_prob);
    const EmbeddingField emb = build_embedding(out.long_offsets);
    const InstanceMasks par = assign_pixels(mask, emb, instances, out.heatmaps);
    const InstanceMasks ser = ref::assign_pixels(mask, emb, instances, out.heatmaps);
    REQUIRE(par.instance_cells.size() == ser.instance_cells.size());
    for (std::size_t j = 0; j < par.instance_cells.size(); ++j)
        CHECK(par.instance_cells[j].data == ser.instance_cells[j].data);
    CHECK(par.label_map.data == ser.label_map.data);
    CHECK(par.distance_evaluations == ser.distance_evaluations);
}

TEST_CASE("rendering is bitwise identical to the serial reference, noise included") {
    std::mt19937 rng(827);
    SceneSpec scene = testsupport::separated_scene(rng, 2, 3);
    scene.noise_sigma["short_offsets"] = 3.0;
    scene.noise_sigma["heatmaps"] = 0.1;
    scene.noise_seed = 5;
    const ModelOutputs par = render_outputs(scene, 8);
    const ModelOutputs ser = ref::render_outputs(scene, 8);
    CHECK(par.heatmaps.data == ser.heatmaps.data);
    CHECK(par.short_offsets.data == ser.short_offsets.data);
    CHECK(par.mid_offsets.data == ser.mid_offsets.data);
    CHECK(par.long_offsets.data == ser.long_offsets.data);
    CHECK(par.seg_prob.data == ser.seg_prob.data);
}

}  // TEST_SUITE
