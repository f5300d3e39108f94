#include <cmath>
#include <random>

#include <doctest.h>

#include "personlab/refine.hpp"
#include "personlab/scoring.hpp"
#include "personlab/segmentation.hpp"
#include "personlab/synth.hpp"
#include "support/field_oracles.hpp"
#include "support/test_scenes.hpp"

using namespace personlab;

namespace {

PoseInstance instance_from_person(const ScenePerson& person) {
    PoseInstance inst;
    inst.keypoints = person.keypoints;
    inst.keypoint_scores.assign(person.keypoints.size(), 1.0);
    inst.keypoint_present.assign(person.keypoints.size(), true);
    return inst;
}

}  // namespace

TEST_SUITE("instance-segmenter") {

TEST_CASE("person mask thresholds the segmentation probability") {
    SUBCASE("all zeros give an empty mask") {
        FieldGrid seg(4, 4, 1, 8);
        const MaskGrid m = person_mask(seg);
        for (auto v : m.data) CHECK(v == 0);
    }
    SUBCASE("exactly 0.5 is included") {
        FieldGrid seg(2, 2, 1, 8);
        seg.at(0, 1, 0) = 0.5f;
        seg.at(1, 0, 0) = 0.4999f;
        const MaskGrid m = person_mask(seg);
        CHECK(m.at(0, 1, 0) == 1);
        CHECK(m.at(1, 0, 0) == 0);
    }
    SUBCASE("random fields match the elementwise rule") {
        std::mt19937 rng(503);
        std::uniform_real_distribution<float> unit(0.0f, 1.0f);
        FieldGrid seg(9, 7, 1, 8);
        for (float& v : seg.data) v = unit(rng);
        const MaskGrid m = person_mask(seg, 0.5);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 7; ++j)
                CHECK(static_cast<bool>(m.at(i, j, 0)) == (seg.at(i, j, 0) >= 0.5f));
    }
}

TEST_CASE("embedding distance basics") {
    const std::vector<Point2D> kps = {{10, 10}, {110, 10}, {60, 74}};
    std::vector<double> weights = {1.0, 1.0, 1.0};
    const double lambda = 80.0;  // sqrt(100*64)

    SUBCASE("perfect shape match gives zero") {
        std::vector<double> emb;
        for (const Point2D& p : kps) {
            emb.push_back(p.x);
            emb.push_back(p.y);
        }
        CHECK(embedding_distance(emb, kps, weights, lambda) == doctest::Approx(0.0));
    }
    SUBCASE("uniform offsets of exactly lambda give one") {
        std::vector<double> emb;
        for (const Point2D& p : kps) {
            emb.push_back(p.x + lambda);
            emb.push_back(p.y);
        }
        CHECK(embedding_distance(emb, kps, weights, lambda) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("mixed weights match a direct evaluation") {
        weights = {0.9, 0.0, 0.4};
        const std::vector<double> emb = {13.0, 14.0, 500.0, -200.0, 61.5, 73.0};
        double want = 0.0;
        want += 0.9 * std::hypot(13.0 - 10.0, 14.0 - 10.0) / lambda;
        want += 0.4 * std::hypot(61.5 - 60.0, 73.0 - 74.0) / lambda;
        want /= (0.9 + 0.4);
        CHECK(embedding_distance(emb, kps, weights, lambda) ==
              doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("all-zero weights return infinity") {
        weights = {0.0, 0.0, 0.0};
        const std::vector<double> emb = {10, 10, 110, 10, 60, 74};
        CHECK(std::isinf(embedding_distance(emb, kps, weights, lambda)));
    }
}

TEST_CASE("distance is invariant to uniform scaling") {
    std::mt19937 rng(509);
    std::uniform_real_distribution<double> pos(0.0, 400.0), w(0.1, 1.0), err(-30.0, 30.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Point2D> kps;
        std::vector<double> weights, emb;
        for (int k = 0; k < 17; ++k) {
            kps.push_back({pos(rng), pos(rng)});
            weights.push_back(w(rng));
            emb.push_back(kps.back().x + err(rng));
            emb.push_back(kps.back().y + err(rng));
        }
        PoseInstance inst;
        inst.keypoints = kps;
        const double base = embedding_distance(emb, kps,  weights, instance_scale(inst));
        for (double c : {0.1, 10.0}) {
            std::vector<Point2D> kps_c;
            std::vector<double> emb_c;
            for (int k = 0; k < 17; ++k) {
                kps_c.push_back({c * kps[k].x, c * kps[k].y});
                emb_c.push_back(c * emb[2 * k]);
                emb_c.push_back(c * emb[2 * k + 1]);
            }
            PoseInstance inst_c;
            inst_c.keypoints = kps_c;
            const double scaled =
                embedding_distance(emb_c, kps_c, weights, instance_scale(inst_c));
            CHECK(std::abs(scaled - base) <= 1e-9 * std::abs(base));
        }
    }
}

TEST_CASE("zero-weight keypoints do not affect the distance") {
    const std::vector<Point2D> kps = {{10, 10}, {50, 50}, {90, 10}};
    std::vector<double> weights = {1.0, 0.0, 0.5};
    std::vector<double> emb = {12, 11, 0, 0, 88, 13};
    const double d1 = embedding_distance(emb, kps, weights, 40.0);
    emb[2] = 1e6;  // move the weight-zero keypoint's embedding arbitrarily
    emb[3] = -1e6;
    const double d2 = embedding_distance(emb, kps, weights, 40.0);
    CHECK(d1 == d2);
}

TEST_CASE("no instances leave every person pixel orphaned") {
    FieldGrid seg(4, 4, 1, 8);
    for (float& v : seg.data) v = 1.0f;
    FieldGrid long_off(4, 4, 2, 8);
    FieldGrid heat(4, 4, 1, 8);
    const InstanceMasks masks =
        assign_pixels(person_mask(seg), build_embedding(long_off), {}, heat);
    CHECK(masks.instance_cells.empty());
    CHECK(masks.distance_evaluations == 0);
    for (auto v : masks.label_map.data) CHECK(v == -1);
}

TEST_CASE("oracle scene pixels attach to their own instance") {
    std::mt19937 rng(521);
    SceneSpec scene;
    scene.width = 640;
    scene.height = 480;
    scene.persons.push_back(testsupport::make_person({160, 140}, 0.9));
    scene.persons.push_back(testsupport::make_person({430, 150}, 1.0));

    const ModelOutputs out = render_outputs(scene, 8);
    const FieldGrid lng = refine_long_offsets(out.long_offsets, out.short_offsets, {});
    std::vector<PoseInstance> instances;
    for (const auto& person : scene.persons) instances.push_back(instance_from_person(person));

    const InstanceMasks masks = assign_pixels(person_mask(out.seg_prob),
                                              build_embedding(lng), instances, out.heatmaps);
    CHECK(masks.distance_evaluations > 0);

    for (std::size_t p = 0; p < scene.persons.size(); ++p) {
        long inter = 0, uni = 0;
        for (int i = 0; i < masks.person_mask.height; ++i) {
            for (int j = 0; j < masks.person_mask.width; ++j) {
                const Point2D x = masks.person_mask.cell_center(i, j);
                const bool truth =
                    testsupport::oracle_in_polygon(scene.persons[p].mask_polygon, x);
                const bool got = masks.instance_cells[p].at(i, j, 0) != 0;
                inter += (truth && got) ? 1 : 0;
                uni += (truth || got) ? 1 : 0;
            }
        }
        CHECK(static_cast<double>(inter) / uni >= 0.95);
    }
}

TEST_CASE("a pixel within threshold of two instances joins both") {
    FieldGrid seg(2, 2, 1, 8);
    for (float& v : seg.data) v = 1.0f;
    FieldGrid heat(2, 2, 1, 8);
    for (float& v : heat.data) v = 1.0f;
    FieldGrid long_off(2, 2, 2, 8);  // embedding = own position
    PoseInstance a, b;
    a.keypoints = {{4.0, 4.0}};   // cell (0,0) center: distance 0
    b.keypoints = {{4.0, 4.0}};
    const InstanceMasks masks =
        assign_pixels(person_mask(seg), build_embedding(long_off), {a, b}, heat, 0.25);
    CHECK(masks.instance_cells[0].at(0, 0, 0) == 1);
    CHECK(masks.instance_cells[1].at(0, 0, 0) == 1);
    CHECK(masks.label_map.at(0, 0, 0) == 0);  // argmin tie goes to the higher-ranked
    CHECK(masks.distance_evaluations == 4 * 2);
}

TEST_CASE("distance evaluations count exactly person pixels times instances") {
    std::mt19937 rng(523);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    FieldGrid seg(10, 10, 1, 8);
    for (float& v : seg.data) v = unit(rng);
    FieldGrid long_off(10, 10, 2, 8), heat(10, 10, 1, 8);
    PoseInstance a;
    a.keypoints = {{20.0, 20.0}};
    const std::vector<PoseInstance> instances = {a, a, a};
    const MaskGrid mask = person_mask(seg);
    long person_pixels = 0;
    for (auto v : mask.data) person_pixels += v ? 1 : 0;
    const InstanceMasks masks =
        assign_pixels(mask, build_embedding(long_off), instances, heat);
    CHECK(masks.distance_evaluations ==
          static_cast<std::uint64_t>(person_pixels) * instances.size());
}

TEST_CASE("assignment is deterministic") {
    std::mt19937 rng(541);
    const SceneSpec scene = testsupport::separated_scene(rng, 2, 2);
    const ModelOutputs out = render_outputs(scene, 8);
    std::vector<PoseInstance> instances;
    for (const auto& person : scene.persons) instances.push_back(instance_from_person(person));
    const EmbeddingField emb = build_embedding(out.long_offsets);
    const MaskGrid mask = person_mask(out.seg_prob);
    const InstanceMasks m1 = assign_pixels(mask, emb, instances, out.heatmaps);
    const InstanceMasks m2 = assign_pixels(mask, emb, instances, out.heatmaps);
    for (std::size_t j = 0; j < m1.instance_cells.size(); ++j)
        CHECK(m1.instance_cells[j].data == m2.instance_cells[j].data);
    CHECK(m1.label_map.data == m2.label_map.data);
}

TEST_CASE("mask upsampling to image resolution") {
    SUBCASE("stride 1 is the identity") {
        InstanceMasks masks;
        masks.person_mask = MaskGrid(3, 3, 1, 1);
        MaskGrid cells(3, 3, 1, 1);
        cells.at(1, 2, 0) = 1;
        masks.instance_cells = {cells};
        const auto img = masks_to_image(masks, 3, 3);
        REQUIRE(img.size() == 1);
        CHECK(img[0].data == cells.data);
    }
    SUBCASE("one cell at stride 8 becomes an 8x8 block") {
        InstanceMasks masks;
        MaskGrid cells(2, 2, 1, 8);
        cells.at(0, 1, 0) = 1;
        masks.instance_cells = {cells};
        const auto img = masks_to_image(masks, 16, 16);
        long on = 0;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                on += img[0].at(y, x, 0);
                CHECK(static_cast<bool>(img[0].at(y, x, 0)) == (y < 8 && x >= 8));
            }
        CHECK(on == 64);
    }
    SUBCASE("random masks match a nearest-neighbor oracle") {
        std::mt19937 rng(547);
        std::uniform_int_distribution<int> bit(0, 1);
        MaskGrid cells(5, 4, 1, 8);
        for (auto& v : cells.data) v = static_cast<std::uint8_t>(bit(rng));
        InstanceMasks masks;
        masks.instance_cells = {cells};
        const auto img = masks_to_image(masks, 37, 29);  // not divisible by stride
        for (int y = 0; y < 37; ++y)
            for (int x = 0; x < 29; ++x)
                CHECK(img[0].at(y, x, 0) ==
                      cells.at(std::min(y / 8, 4), std::min(x / 8, 3), 0));
    }
}

}  // TEST_SUITE
