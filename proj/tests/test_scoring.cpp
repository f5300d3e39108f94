#include <cmath>
#include <random>

#include <doctest.h>

#include "personlab/scoring.hpp"
#include "support/eoks_oracle.hpp"

using namespace personlab;

namespace {

PoseInstance make_instance(std::vector<Point2D> kps, double kp_score = 0.0) {
    PoseInstance inst;
    inst.keypoints = std::move(kps);
    inst.keypoint_scores.assign(inst.keypoints.size(), kp_score);
    inst.keypoint_present.assign(inst.keypoints.size(), true);
    return inst;
}

}  // namespace

TEST_SUITE("scoring-nms") {

TEST_CASE("instance scale is the root of the tight bbox area") {
    const PoseInstance inst = make_instance({{10, 20}, {110, 20}, {60, 84}});
    CHECK(instance_scale(inst) == doctest::Approx(80.0).epsilon(1e-12));  // sqrt(100*64)
}

TEST_CASE("coincident keypoints fall back to the scale floor") {
    const PoseInstance inst = make_instance({{42, 17}, {42, 17}, {42, 17}});
    CHECK(instance_scale(inst) == doctest::Approx(1.0));
    CHECK(instance_scale(inst, 2.5) == doctest::Approx(2.5));
}

TEST_CASE("instance scale matches a brute-force bbox computation") {
    std::mt19937 rng(401);
    std::uniform_real_distribution<double> pos(0.0, 300.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2D> kps;
        for (int k = 0; k < 17; ++k) kps.push_back({pos(rng), pos(rng)});
        double lo_x = 1e18, hi_x = -1e18, lo_y = 1e18, hi_y = -1e18;
        for (const Point2D& p : kps) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
        const double want = std::max(std::sqrt((hi_x - lo_x) * (hi_y - lo_y)), 1.0);
        CHECK(instance_scale(make_instance(kps)) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("hough scoring samples the maps at the keypoints") {
    HoughMaps hough;
    hough.disk_radius = 32.0;
    hough.grids = ScoreGrid(4, 4, 2, 8);
    hough.grids.at(1, 1, 0) = 0.6;

    SUBCASE("keypoint at the peak cell center") {
        const auto s = score_keypoints_hough(make_instance({{12, 12}, {12, 12}}), hough);
        CHECK(s[0] == doctest::Approx(0.6));
        CHECK(s[1] == doctest::Approx(0.0));  // channel 1 is empty
    }
    SUBCASE("keypoint in a zero region") {
        const auto s = score_keypoints_hough(make_instance({{28, 28}, {28, 28}}), hough);
        CHECK(s[0] == doctest::Approx(0.0));
    }
    SUBCASE("off-center keypoint interpolates the 4 cells") {
        hough.grids.at(1, 2, 0) = 0.2;
        hough.grids.at(2, 1, 0) = 0.4;
        hough.grids.at(2, 2, 0) = 0.8;
        // position (14, 16): fx = 0.25, fy = 0.5 between cells (1,1)...(2,2)
        const double want = 0.5 * (0.75 * 0.6 + 0.25 * 0.2) + 0.5 * (0.75 * 0.4 + 0.25 * 0.8);
        const auto s = score_keypoints_hough(make_instance({{14, 16}, {0, 0}}), hough);
        CHECK(s[0] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("expected OKS is 1 for concentrated mass and certain presence") {
    HoughMaps hough;
    hough.disk_radius = 32.0;
    hough.grids = ScoreGrid(8, 8, 1, 8);
    hough.grids.at(3, 3, 0) = 0.7;  // all disk mass at the keypoint cell
    FieldGrid heat(8, 8, 1, 8);
    for (float& v : heat.data) v = 1.0f;
    const PoseInstance inst = make_instance({Point2D{28, 28}});
    const auto s = score_keypoints_expected_oks(inst, hough, heat, OksParams{{0.1}}, 32.0);
    CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero presence zeroes the expected OKS score") {
    HoughMaps hough;
    hough.disk_radius = 32.0;
    hough.grids = ScoreGrid(8, 8, 1, 8);
    for (double& v : hough.grids.data) v = 0.3;
    FieldGrid heat(8, 8, 1, 8);  // p = 0 everywhere
    const auto s = score_keypoints_expected_oks(make_instance({Point2D{28, 28}}), hough, heat,
                                                OksParams{{0.1}}, 32.0);
    CHECK(s[0] == 0.0);
}

TEST_CASE("zero disk mass scores zero") {
    HoughMaps hough;
    hough.disk_radius = 32.0;
    hough.grids = ScoreGrid(8, 8, 1, 8);
    FieldGrid heat(8, 8, 1, 8);
    for (float& v : heat.data) v = 1.0f;
    const auto s = score_keypoints_expected_oks(make_instance({Point2D{28, 28}}), hough, heat,
                                                OksParams{{0.1}}, 32.0);
    CHECK(s[0] == 0.0);
}

TEST_CASE("expected OKS matches fine-grid quadrature on Gaussian mass") {
    std::mt19937 rng(409);
    std::uniform_real_distribution<double> sig(4.0, 6.5), kap(0.06, 0.2);
    std::uniform_real_distribution<double> lam(25.0, 60.0), jitter(-3.0, 3.0);
    for (int trial = 0; trial < 8; ++trial) {
        const Point2D y{127.0 + jitter(rng), 129.0 + jitter(rng)};
        const Point2D mu{y.x + jitter(rng), y.y + jitter(rng)};
        const auto cmp = testsupport::compare_expected_oks(2, y, mu, sig(rng), lam(rng),
                                                           kap(rng), 0.85);
        CHECK(std::abs(cmp.implementation - cmp.oracle) <= 1e-4);
        CHECK(cmp.implementation <= cmp.presence + 1e-12);
    }
}

TEST_CASE("expected OKS discretization error shrinks with the stride") {
    const Point2D y{126.3, 130.1}, mu{128.4, 127.2};
    auto err = [&](int stride) {
        const auto cmp = testsupport::compare_expected_oks(stride, y, mu, 10.0, 40.0, 0.12, 0.9);
        return std::abs(cmp.implementation - cmp.oracle);
    };
    const double e8 = err(8), e4 = err(4), e2 = err(2);
    CHECK(e4 < e8);
    CHECK(e2 < e4);
}

TEST_CASE("expected OKS never exceeds the sampled presence") {
    std::mt19937 rng(419);
    std::uniform_real_distribution<double> unit(0.0, 1.0), pos(16.0, 112.0);
    for (int trial = 0; trial < 15; ++trial) {
        HoughMaps hough;
        hough.disk_radius = 32.0;
        hough.grids = ScoreGrid(16, 16, 2, 8);
        for (double& v : hough.grids.data) v = unit(rng);
        FieldGrid heat(16, 16, 2, 8);
        for (float& v : heat.data) v = static_cast<float>(unit(rng));
        const PoseInstance inst =
            make_instance({{pos(rng), pos(rng)}, {pos(rng), pos(rng)}});
        const auto s =
            score_keypoints_expected_oks(inst, hough, heat, OksParams{{0.1, 0.15}}, 32.0);
        for (int k = 0; k < 2; ++k) {
            const double presence = bilinear_sample(heat, k, inst.keypoints[k]);
            CHECK(s[k] <= presence + 1e-12);
            CHECK(s[k] >= 0.0);
        }
    }
}

TEST_CASE("hard NMS keeps one of two identical instances") {
    PoseInstance a = make_instance({{10, 10}, {50, 10}, {30, 60}}, 0.9);
    PoseInstance b = a;
    b.keypoint_scores.assign(3, 0.5);
    const OksParams oks{{0.1, 0.1, 0.1}};
    const auto kept = hard_nms({a, b}, oks, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].instance_score == doctest::Approx(0.9));
}

TEST_CASE("hard NMS keeps far-apart instances") {
    PoseInstance a = make_instance({{10, 10}, {50, 10}, {30, 60}}, 0.9);
    PoseInstance b = make_instance({{510, 510}, {550, 510}, {530, 560}}, 0.5);
    CHECK(hard_nms({a, b}, OksParams{{0.1, 0.1, 0.1}}, 0.5).size() == 2);
}

TEST_CASE("hard NMS respects the threshold on constructed OKS values") {
    // rigid x-shift with uniform kappas gives OKS = exp(-c^2/2) exactly
    const double kappa = 0.12;
    std::vector<Point2D> base;
    for (int k = 0; k < 17; ++k)
        base.push_back({40.0 * (k % 5), 35.0 * (k / 5)});
    PoseInstance a = make_instance(base, 0.9);
    const double lambda = instance_scale(a);
    const OksParams oks{std::vector<double>(17, kappa)};

    auto shifted = [&](double target_oks, double score) {
        const double c = std::sqrt(-2.0 * std::log(target_oks));
        std::vector<Point2D> kps = base;
        for (Point2D& p : kps) p.x += c * lambda * kappa;
        return make_instance(kps, score);
    };

    SUBCASE("pair at OKS 0.49 survives") {
        CHECK(hard_nms({a, shifted(0.49, 0.5)}, oks, 0.5).size() == 2);
    }
    SUBCASE("pair at OKS 0.51 is suppressed") {
        CHECK(hard_nms({a, shifted(0.51, 0.5)}, oks, 0.5).size() == 1);
    }
    SUBCASE("pose_oks reproduces the target") {
        const PoseInstance b = shifted(0.37, 0.5);
        CHECK(pose_oks(b.keypoints, a.keypoints, lambda, oks) ==
              doctest::Approx(0.37).epsilon(1e-9));
    }
}

TEST_CASE("soft NMS leaves a lone instance at its mean keypoint score") {
    PoseInstance a = make_instance({{10, 10}, {50, 10}, {30, 60}});
    a.keypoint_scores = {0.9, 0.6, 0.3};
    const auto out = soft_nms_rescore({a}, 10.0);
    REQUIRE(out.size() == 1);
    CHECK(out[0].instance_score == doctest::Approx((0.9 + 0.6 + 0.3) / 3.0).epsilon(1e-12));
}

TEST_CASE("an exact duplicate rescored by soft NMS drops to zero") {
    PoseInstance a = make_instance({{10, 10}, {50, 10}, {30, 60}}, 0.9);
    PoseInstance b = a;
    b.keypoint_scores.assign(3, 0.8);
    const auto out = soft_nms_rescore({a, b}, 10.0);
    REQUIRE(out.size() == 2);
    CHECK(out[0].instance_score == doctest::Approx(0.9));
    CHECK(out[1].instance_score == 0.0);
}

TEST_CASE("soft NMS counts only unclaimed keypoints") {
    std::vector<Point2D> a_kps, b_kps;
    for (int k = 0; k < 17; ++k) {
        a_kps.push_back({30.0 * k, 0.0});
        // first 5 keypoints claimed, the rest 20 px away (> r = 10)
        b_kps.push_back(k < 5 ? a_kps.back() : Point2D{30.0 * k + 20.0, 0.0});
    }
    PoseInstance a = make_instance(a_kps, 0.9);
    PoseInstance b = make_instance(b_kps, 0.8);
    const auto out = soft_nms_rescore({a, b}, 10.0);
    REQUIRE(out.size() == 2);
    CHECK(out[1].instance_score == doctest::Approx(12.0 * 0.8 / 17.0).epsilon(1e-12));
}

TEST_CASE("NMS structural properties hold on random inputs") {
    std::mt19937 rng(431);
    std::uniform_real_distribution<double> pos(0.0, 200.0), score(0.0, 1.0);
    const OksParams oks{std::vector<double>(5, 0.15)};
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<PoseInstance> instances;
        for (int n = 0; n < 6; ++n) {
            std::vector<Point2D> kps;
            for (int k = 0; k < 5; ++k) kps.push_back({pos(rng), pos(rng)});
            PoseInstance inst = make_instance(kps);
            for (double& s : inst.keypoint_scores) s = score(rng);
            inst.decode_order = n;
            instances.push_back(std::move(inst));
        }
        auto mean_of = [](const PoseInstance& inst) {
            double m = 0.0;
            for (double s : inst.keypoint_scores) m += s;
            return m / inst.keypoint_scores.size();
        };

        const auto soft = soft_nms_rescore(instances, 10.0);
        CHECK(soft.size() == instances.size());
        for (const PoseInstance& inst : soft)
            CHECK(inst.instance_score <= mean_of(inst) + 1e-12);
        for (std::size_t i = 1; i < soft.size(); ++i)
            CHECK(soft[i - 1].instance_score >= soft[i].instance_score);

        const auto hard = hard_nms(instances, oks, 0.5);
        CHECK(hard.size() <= instances.size());
        for (const PoseInstance& kept : hard) {
            bool found = false;
            for (const PoseInstance& in : instances)
                found = found || in.decode_order == kept.decode_order;
            CHECK(found);
        }
    }
}

TEST_CASE("score_and_rank applies the configured method and NMS") {
    HoughMaps hough;
    hough.disk_radius = 32.0;
    hough.grids = ScoreGrid(8, 8, 2, 8);
    hough.grids.at(2, 2, 0) = 0.8;
    hough.grids.at(2, 2, 1) = 0.6;
    hough.grids.at(5, 5, 0) = 1.4;  // crowded peak, clamps to 1 as a score
    FieldGrid heat(8, 8, 2, 8);
    for (float& v : heat.data) v = 1.0f;

    PoseInstance a = make_instance({{20, 20}, {20, 20}});
    PoseInstance b = make_instance({{44, 44}, {44, 44}});
    const OksParams oks{{0.2, 0.2}};

    ScoringConfig config;
    config.method = ScoringMethod::Hough;
    config.nms = NmsMethod::Hard;
    const auto ranked = score_and_rank({a, b}, hough, heat, oks, config, 32.0);
    REQUIRE(ranked.size() == 2);
    // a ranks first: mean (0.8 + 0.6)/2 beats b's (1.0 + 0)/2
    CHECK(ranked[0].keypoint_scores[0] == doctest::Approx(0.8));
    CHECK(ranked[1].keypoint_scores[0] == doctest::Approx(1.0));  // 1.4 peak clamps
    CHECK(ranked[0].instance_score >= ranked[1].instance_score);

    config.nms = NmsMethod::Soft;
    const auto soft = score_and_rank({a, a}, hough, heat, oks, config, 32.0);
    REQUIRE(soft.size() == 2);  // soft NMS keeps duplicates, rescored to zero
    CHECK(soft[1].instance_score == 0.0);
}

TEST_CASE("kappa files load and reject malformed input") {
    const OksParams coco = OksParams::coco();
    CHECK(coco.kappas.size() == 17);
    for (double k : coco.kappas) CHECK(k > 0.0);
    CHECK(coco.kappas[0] == doctest::Approx(0.052));   // nose
    CHECK(coco.kappas[11] == doctest::Approx(0.214));  // left hip
}

}  // TEST_SUITE
