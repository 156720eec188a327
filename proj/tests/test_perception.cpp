#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rowsim/oracle.hpp"
#include "rowsim/perception.hpp"

using namespace rowsim;

namespace {

HeatmapTriple blank(int w = 640, int h = 480) {
    CameraIntrinsics in;
    in.width = w;
    in.height = h;
    in.cx = w / 2.0;
    in.cy = h / 2.0;
    return make_heatmaps(in, 1);
}

Camera level_camera() {
    Camera cam;
    cam.mount.forward = 0.0;
    cam.mount.pitch = 0.0;
    return cam;
}

struct Scene {
    World world = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    Camera cam = default_cameras()[1];

    NavEstimate render(const Pose2D& pose, double roll, const EstimatorConfig& cfg,
                       double render_roll_flag = 1.0) const {
        NoiseModel n;
        n.heatmap_stride = 1;
        const TrueKeypoints kp = true_keypoints(world, pose, roll * render_roll_flag, cam);
        const HeatmapTriple h = render_heatmaps(kp, n, FrameCorruption{}, cam.intrinsics, 1);
        return estimate(h, cam, roll, cfg);
    }
};

}  // namespace

TEST(ExtractKeypoints, SinglePeakPasses) {
    HeatmapTriple h = blank();
    for (int c = 0; c < 3; ++c) add_blob(h, c, Pixel{100, 50}, 1.0, 6.0);
    const KeypointSet ks = extract_keypoints(h, ConfidenceConfig{});
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(ks.k[c].px.u, 100);
        EXPECT_EQ(ks.k[c].px.v, 50);
        EXPECT_TRUE(ks.k[c].passed());
        EXPECT_FLOAT_EQ(ks.k[c].peak, 1.0F);
    }
}

TEST(ExtractKeypoints, ZeroChannelFailsPeak) {
    const KeypointSet ks = extract_keypoints(blank(), ConfidenceConfig{});
    EXPECT_FALSE(ks.vp().peak_ok);
    EXPECT_FALSE(ks.vp().passed());
}

TEST(ExtractKeypoints, TwoEqualPeaksFailUniqueness) {
    HeatmapTriple h = blank();
    add_blob(h, kLeft, Pixel{100, 50}, 1.0, 6.0);
    add_blob(h, kLeft, Pixel{300, 50}, 1.0, 6.0);
    const KeypointSet ks = extract_keypoints(h, ConfidenceConfig{});
    EXPECT_TRUE(ks.left().peak_ok);
    EXPECT_FALSE(ks.left().unique_ok);
    EXPECT_FLOAT_EQ(ks.left().second, 1.0F);
    // Tie goes to the smaller column on the same row.
    EXPECT_EQ(ks.left().px.u, 100);
}

TEST(ExtractKeypoints, TieBreaksBySmallestRowThenColumn) {
    HeatmapTriple h = blank(8, 8);
    h.channels[0][3 * 8 + 5] = 1.0F;
    h.channels[0][3 * 8 + 2] = 1.0F;
    h.channels[0][6 * 8 + 1] = 1.0F;
    const KeypointSet ks = extract_keypoints(h, ConfidenceConfig{});
    EXPECT_EQ(ks.vp().px.v, 3);
    EXPECT_EQ(ks.vp().px.u, 2);
}

TEST(ExtractKeypoints, TranslationMovesKeypointsEqually) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(60, 400);
    for (int i = 0; i < 20; ++i) {
        HeatmapTriple a = blank();
        HeatmapTriple b = blank();
        const int du = 17;
        const int dv = -9;
        for (int c = 0; c < 3; ++c) {
            const Pixel p{std::round(pos(rng)), std::round(pos(rng) / 2 + 20)};
            add_blob(a, c, p, 1.0, 6.0);
            add_blob(b, c, Pixel{p.u + du, p.v + dv}, 1.0, 6.0);
        }
        const KeypointSet ka = extract_keypoints(a, ConfidenceConfig{});
        const KeypointSet kb = extract_keypoints(b, ConfidenceConfig{});
        for (int c = 0; c < 3; ++c) {
            EXPECT_DOUBLE_EQ(kb.k[c].px.u - ka.k[c].px.u, du);
            EXPECT_DOUBLE_EQ(kb.k[c].px.v - ka.k[c].px.v, dv);
        }
    }
}

TEST(ExtractKeypoints, StrideMapsToCellCenters) {
    CameraIntrinsics in;
    HeatmapTriple h = make_heatmaps(in, 4);
    EXPECT_EQ(h.width, 160);
    EXPECT_EQ(h.height, 120);
    add_blob(h, kVanishing, Pixel{201.5, 101.5}, 1.0, 6.0);
    const KeypointSet ks = extract_keypoints(h, ConfidenceConfig{});
    EXPECT_DOUBLE_EQ(ks.vp().px.u, 201.5);
    EXPECT_DOUBLE_EQ(ks.vp().px.v, 101.5);
}

TEST(RollCorrect, Examples) {
    const CameraIntrinsics in;
    const Pixel p{123.0, 77.0};
    const Pixel id = roll_correct(p, in, 0.0);
    EXPECT_DOUBLE_EQ(id.u, p.u);
    EXPECT_DOUBLE_EQ(id.v, p.v);
    const Pixel c = roll_correct(Pixel{in.cx, in.cy}, in, 0.7);
    EXPECT_NEAR(c.u, in.cx, 1e-12);
    EXPECT_NEAR(c.v, in.cy, 1e-12);
    const Pixel q = roll_correct(Pixel{in.cx + 100, in.cy}, in, kPi / 2);
    EXPECT_NEAR(q.u, in.cx, 1e-9);
    EXPECT_NEAR(q.v, in.cy - 100, 1e-9);
}

TEST(HeadingFromVp, Examples) {
    const Camera cam = level_camera();
    const auto h0 = heading_from_vp(Pixel{cam.intrinsics.cx, 200}, cam.intrinsics, cam.mount, 0.0);
    ASSERT_TRUE(h0);
    EXPECT_NEAR(*h0, 0.0, 1e-12);
    const auto h1 = heading_from_vp(Pixel{380, cam.intrinsics.cy}, cam.intrinsics, cam.mount, 0.0);
    ASSERT_TRUE(h1);
    EXPECT_NEAR(*h1, std::atan(60.0 / 600.0), 1e-12);
    EXPECT_NEAR(*h1, 0.0997, 1e-4);
}

TEST(HeadingFromVp, RolledSceneCorrected) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    const Camera cam = default_cameras()[1];
    const Pose2D pose{20, 0.03, 0.12};
    const auto vp0 = true_keypoints(w, pose, 0.0, cam).vp();
    const auto vp1 = true_keypoints(w, pose, 0.1, cam).vp();
    const auto h0 = heading_from_vp(vp0, cam.intrinsics, cam.mount, 0.0);
    const auto h1 = heading_from_vp(vp1, cam.intrinsics, cam.mount, 0.1);
    ASSERT_TRUE(h0 && h1);
    EXPECT_NEAR(*h0, *h1, 1e-6);
    EXPECT_NEAR(*h0, 0.12, 1e-9);
}

TEST(HeadingFromVp, RayBehindIsEmpty) {
    // Pitched almost straight down: the lower image rows look backwards.
    Camera down = level_camera();
    down.mount.pitch = 1.4;
    EXPECT_FALSE(heading_from_vp(Pixel{320, 470}, down.intrinsics, down.mount, 0.0));
    EXPECT_TRUE(heading_from_vp(Pixel{320, 10}, down.intrinsics, down.mount, 0.0));
}

TEST(HeadingFromVp, RearCameraMapsIntoForwardConvention) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    const Camera rear = default_cameras()[3];
    for (double th : {-0.2, 0.0, 0.15}) {
        const TrueKeypoints kp = true_keypoints(w, Pose2D{20, 0.05, th}, 0.03, rear);
        const auto h = heading_from_vp(kp.vp(), rear.intrinsics, rear.mount, 0.03);
        ASSERT_TRUE(h);
        EXPECT_NEAR(*h, th, 1e-9);
        const LateralResult r = lateral_from_intercepts(kp.left(), kp.right(), *h, rear.intrinsics,
                                                        rear.mount, 0.03, 0.75);
        ASSERT_TRUE(r.ok());
        EXPECT_NEAR(r.lateral, 0.05, 1e-9);
    }
}

TEST(LateralFromIntercepts, CenteredAndOffset) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    const Camera cam = default_cameras()[1];
    for (const Pose2D pose : {Pose2D{20, 0, 0}, Pose2D{20, 0.10, 0}, Pose2D{20, 0, 0.2},
                              Pose2D{20, -0.08, -0.15}}) {
        const TrueKeypoints kp = true_keypoints(w, pose, 0.0, cam);
        const LateralResult r = lateral_from_intercepts(kp.left(), kp.right(), pose.theta,
                                                        cam.intrinsics, cam.mount, 0.0, 0.75);
        ASSERT_TRUE(r.ok());
        EXPECT_NEAR(r.lateral, pose.y, 1e-9);
        EXPECT_NEAR(r.row_width, 0.75, 1e-9);
    }
}

TEST(LateralFromIntercepts, RowWidthGate) {
    const Camera cam = default_cameras()[1];
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    const TrueKeypoints kp = true_keypoints(w, Pose2D{20, 0, 0}, 0.0, cam);
    // Both intercepts on the same pixel: zero width.
    const LateralResult same = lateral_from_intercepts(kp.left(), kp.left(), 0.0, cam.intrinsics,
                                                       cam.mount, 0.0, 0.75);
    EXPECT_EQ(same.status, EstimateStage::RowWidth);
    const LateralResult sky = lateral_from_intercepts(Pixel{100, 10}, kp.right(), 0.0,
                                                      cam.intrinsics, cam.mount, 0.0, 0.75);
    EXPECT_EQ(sky.status, EstimateStage::Lateral);
}

TEST(Estimate, CleanCenteredIsValidZero) {
    Scene s;
    EstimatorConfig cfg;
    const NavEstimate e = s.render(Pose2D{30, 0, 0}, 0.0, cfg);
    ASSERT_TRUE(e.valid);
    EXPECT_NEAR(e.heading, 0.0, 2e-3);
    EXPECT_NEAR(e.lateral, 0.0, 5e-3);
    EXPECT_NEAR(e.row_width, 0.75, 1e-2);
    EXPECT_LT(std::abs(e.heading), kPi / 2);
}

TEST(Estimate, OccludedIsInvalidAtConfidence) {
    Scene s;
    const TrueKeypoints kp = true_keypoints(s.world, Pose2D{30, 0, 0}, 0.0, s.cam);
    FrameCorruption occ;
    occ.occlusion = 1.0;
    const HeatmapTriple h = render_heatmaps(kp, NoiseModel{}, occ, s.cam.intrinsics, 1);
    const NavEstimate e = estimate(h, s.cam, 0.0, EstimatorConfig{}, 2);
    EXPECT_FALSE(e.valid);
    EXPECT_EQ(e.stage, EstimateStage::Confidence);
    EXPECT_EQ(e.camera, 2);
}

TEST(Estimate, CornGapSweepEndsInvalidOrBiasedLeft) {
    AnomalySpec gap;
    gap.kind = AnomalyKind::CornGap;
    gap.side = Side::Left;
    gap.start_s = 32;
    gap.extent_s = 5;
    const Camera cam = default_cameras()[1];
    const Pose2D pose{30, 0, 0};
    for (double m : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        gap.magnitude = m;
        const World w = build_world(FieldSpec{}, RobotSpec{}, {gap}, 1);
        NoiseModel n;
        n.heatmap_stride = 1;
        const auto corr = corruption_at(w, pose, 0.0, cam);
        const auto h = render_heatmaps(true_keypoints(w, pose, 0.0, cam), n, corr, cam.intrinsics, 1);
        KeypointSet ks;
        const NavEstimate e = estimate(h, cam, 0.0, EstimatorConfig{}, -1, &ks);
        if (m < 0.3) {
            EXPECT_TRUE(e.valid) << m;
        } else if (m < 0.7) {
            EXPECT_FALSE(ks.left().unique_ok) << m;
            EXPECT_FALSE(e.valid) << m;
        } else {
            // Left intercept latched onto the neighbor row: too wide a lane.
            EXPECT_FALSE(e.valid) << m;
            EXPECT_EQ(e.stage, EstimateStage::RowWidth) << m;
        }
    }
}

TEST(Fuse, Examples) {
    const NavEstimate a = NavEstimate::make_valid(0.10, 0.02, 0.75, 0);
    const NavEstimate b = NavEstimate::make_valid(0.12, 0.04, 0.77, 1);
    const NavEstimate bad = NavEstimate::make_invalid(EstimateStage::Confidence, 2);
    std::vector<NavEstimate> in{a, b};
    NavEstimate f = fuse(in);
    ASSERT_TRUE(f.valid);
    EXPECT_NEAR(f.heading, 0.11, 1e-12);
    EXPECT_NEAR(f.lateral, 0.03, 1e-12);
    EXPECT_NEAR(f.row_width, 0.76, 1e-12);

    in = {bad, a, bad};
    f = fuse(in);
    EXPECT_TRUE(f.valid);
    EXPECT_EQ(f.heading, a.heading);
    EXPECT_EQ(f.lateral, a.lateral);

    in = {a, a, a};
    f = fuse(in);
    EXPECT_DOUBLE_EQ(f.heading, a.heading);
    EXPECT_DOUBLE_EQ(f.lateral, a.lateral);

    in = {bad, bad};
    EXPECT_FALSE(fuse(in).valid);
    EXPECT_FALSE(fuse(std::vector<NavEstimate>{}).valid);
}

TEST(Fuse, StaysInConvexHull) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::bernoulli_distribution valid(0.6);
    for (int i = 0; i < 500; ++i) {
        std::vector<NavEstimate> in;
        for (int k = 0; k < 4; ++k) {
            in.push_back(valid(rng) ? NavEstimate::make_valid(u(rng), u(rng), 0.75 + u(rng) / 5)
                                    : NavEstimate::make_invalid(EstimateStage::Confidence));
        }
        const NavEstimate f = fuse(in);
        double hmin = 1e9, hmax = -1e9, lmin = 1e9, lmax = -1e9;
        bool any = false;
        for (const auto& e : in) {
            if (!e.valid) continue;
            any = true;
            hmin = std::min(hmin, e.heading);
            hmax = std::max(hmax, e.heading);
            lmin = std::min(lmin, e.lateral);
            lmax = std::max(lmax, e.lateral);
        }
        ASSERT_EQ(f.valid, any);
        if (!any) continue;
        EXPECT_GE(f.heading, hmin - 1e-15);
        EXPECT_LE(f.heading, hmax + 1e-15);
        EXPECT_GE(f.lateral, lmin - 1e-15);
        EXPECT_LE(f.lateral, lmax + 1e-15);
    }
}

TEST(RoundTrip, ContinuousKeypointsInvertExactly) {
    for (const Camera& cam : default_cameras()) {
        const auto st = oracle::perception_round_trip(cam, 300, 0.12, 0.25, 0.15, 21);
        EXPECT_EQ(st.poses, 300);
        EXPECT_LT(st.max_heading_error, 1e-9) << cam.name;
        EXPECT_LT(st.max_lateral_error, 1e-9) << cam.name;
    }
}

TEST(RoundTrip, BackProjectionRecoversGroundPoints) {
    // A ground point seen by the camera, inverted through the lateral solver
    // as a pair of row lines at its y, lands back on the same y.
    const Camera cam = default_cameras()[0];
    const Pose2D pose{10, 0.04, -0.1};
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> y(0.3, 0.45);
    for (int i = 0; i < 50; ++i) {
        const double yl = y(rng);
        const double yr = -y(rng);
        const auto pl = row_intercept(cam.intrinsics, cam.mount, pose, 0.02, yl);
        const auto pr = row_intercept(cam.intrinsics, cam.mount, pose, 0.02, yr);
        ASSERT_TRUE(pl && pr);
        const LateralResult r = lateral_from_intercepts(*pl, *pr, pose.theta, cam.intrinsics,
                                                        cam.mount, 0.02, 0.75);
        ASSERT_TRUE(r.ok());
        EXPECT_NEAR(r.row_width, yl - yr, 1e-6);
        EXPECT_NEAR(pose.y - r.lateral, (yl + yr) / 2, 1e-6);
    }
}

TEST(Ablation, RollCorrectionMatters) {
    Scene s;
    s.world = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EstimatorConfig on;
    EstimatorConfig off;
    off.roll_correction = false;
    std::vector<double> err_on;
    std::vector<double> err_off;
    for (int i = 0; i < 40; ++i) {
        const Pose2D pose{30, 0.1 * u(rng), 0.1 * u(rng)};
        const NavEstimate a = s.render(pose, 0.1, on);
        const NavEstimate b = s.render(pose, 0.1, off);
        ASSERT_TRUE(a.valid);
        err_on.push_back(std::abs(a.lateral - pose.y));
        if (b.valid) err_off.push_back(std::abs(b.lateral - pose.y));
    }
    std::nth_element(err_on.begin(), err_on.begin() + err_on.size() / 2, err_on.end());
    std::nth_element(err_off.begin(), err_off.begin() + err_off.size() / 2, err_off.end());
    EXPECT_GT(err_off[err_off.size() / 2], 5 * err_on[err_on.size() / 2]);
}

TEST(Ablation, PrincipalPointErrorSkewsHeading) {
    Scene s;
    s.cam = level_camera();
    EstimatorConfig cfg;
    cfg.cx_error_px = 30.0;
    const NavEstimate e = s.render(Pose2D{30, 0, 0.0}, 0.0, cfg);
    ASSERT_TRUE(e.valid);
    EXPECT_NEAR(std::abs(e.heading), std::atan(30.0 / 600.0), 2e-3);
}
