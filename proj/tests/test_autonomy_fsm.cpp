#include <gtest/gtest.h>

#include <vector>

#include "rowsim/autonomy_fsm.hpp"

using namespace rowsim;

namespace {

std::vector<OdometrySample> history(double t0, double t1, double dt, double cmd, double ach) {
    std::vector<OdometrySample> h;
    for (double t = t0; t <= t1 + 1e-9; t += dt) {
        OdometrySample s;
        s.t = t;
        s.commanded_v = cmd;
        s.achieved_v = ach;
        h.push_back(s);
    }
    return h;
}

NavEstimate good(double heading = 0.0) { return NavEstimate::make_valid(heading, 0.0, 0.75); }
NavEstimate bad() { return NavEstimate::make_invalid(EstimateStage::Confidence); }

FsmInput input(double t, bool crash, NavEstimate front, double odo) {
    FsmInput in;
    in.t = t;
    in.crash = crash;
    in.front = front;
    in.rear = good();
    in.odometer = odo;
    return in;
}

}  // namespace

TEST(DetectCrash, Examples) {
    const CrashDetectorConfig cfg;
    EXPECT_TRUE(detect_crash(history(0, 1.5, 0.05, 0.9, 0.05), cfg));
    EXPECT_FALSE(detect_crash(history(0, 1.5, 0.05, 0.9, 0.9), cfg));
    EXPECT_FALSE(detect_crash(history(0, 1.5, 0.05, 0.0, 0.3), cfg));
    // Reverse driving counts by magnitude.
    EXPECT_TRUE(detect_crash(history(0, 1.5, 0.05, -0.4, 0.0), cfg));
}

TEST(DetectCrash, NeedsFullWindow) {
    const CrashDetectorConfig cfg;
    EXPECT_FALSE(detect_crash({}, cfg));
    EXPECT_FALSE(detect_crash(history(0, 0.9, 0.05, 0.9, 0.0), cfg));
    EXPECT_TRUE(detect_crash(history(0, 1.0, 0.05, 0.9, 0.0), cfg));
}

TEST(DetectCrash, CompleteWithinWindowPlusOnePeriod) {
    // Immobilized at t = 3.0 after driving normally.
    const CrashDetectorConfig cfg;
    const double dt = 0.05;
    std::vector<OdometrySample> h = history(0, 3.0, dt, 0.9, 0.9);
    double detected = -1;
    for (double t = 3.0 + dt; t < 6.0 && detected < 0; t += dt) {
        OdometrySample s;
        s.t = t;
        s.commanded_v = 0.9;
        h.push_back(s);
        if (detect_crash(h, cfg)) detected = t;
    }
    ASSERT_GT(detected, 0);
    EXPECT_LE(detected - 3.0, cfg.window + dt + 1e-9);
}

TEST(DetectCrash, ConfigValidation) {
    CrashDetectorConfig c;
    c.speed_ratio_min = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = CrashDetectorConfig{};
    c.window = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Fsm, CrashEntersRecoveryThenUsesRear) {
    AutonomyFsm fsm{RecoveryConfig{}};
    FsmOutput o = fsm.update(input(0.0, false, good(), 0.0));
    EXPECT_EQ(o.mode.kind, ModeKind::RowFollow);
    EXPECT_EQ(o.source, CommandSource::FrontFused);
    o = fsm.update(input(0.05, true, good(), 5.0));
    EXPECT_EQ(o.mode.kind, ModeKind::CrashRecovery);
    EXPECT_TRUE(o.transitioned);
    EXPECT_EQ(o.source, CommandSource::Stop);
    o = fsm.update(input(0.10, false, good(), 5.0));
    EXPECT_EQ(o.source, CommandSource::Rear);
}

TEST(Fsm, ResumesAfterReversingWithGoodFrontEstimate) {
    AutonomyFsm fsm{RecoveryConfig{}};
    fsm.update(input(0.0, true, good(), 10.0));
    // Not far enough yet.
    EXPECT_EQ(fsm.update(input(0.1, false, good(0.05), 9.5)).mode.kind, ModeKind::CrashRecovery);
    // Far enough but heading too large.
    EXPECT_EQ(fsm.update(input(0.2, false, good(0.3), 8.8)).mode.kind, ModeKind::CrashRecovery);
    // Far enough but front invalid.
    EXPECT_EQ(fsm.update(input(0.3, false, bad(), 8.8)).mode.kind, ModeKind::CrashRecovery);
    const FsmOutput o = fsm.update(input(0.4, false, good(0.05), 8.8));
    EXPECT_EQ(o.mode.kind, ModeKind::RowFollow);
    EXPECT_TRUE(o.transitioned);
    EXPECT_EQ(o.source, CommandSource::FrontFused);
}

TEST(Fsm, ThirdCrashAtSameSpotIntervenes) {
    AutonomyFsm fsm{RecoveryConfig{}};
    double odo = 20.0;
    for (int attempt = 1; attempt <= 3; ++attempt) {
        const FsmOutput o = fsm.update(input(attempt, true, good(), odo));
        if (attempt < 3) {
            ASSERT_EQ(o.mode.kind, ModeKind::CrashRecovery);
            fsm.update(input(attempt + 0.5, false, good(), odo - 1.2));
            ASSERT_EQ(fsm.mode().kind, ModeKind::RowFollow);
            odo += 0.5;
        } else {
            EXPECT_EQ(o.mode.kind, ModeKind::Intervention);
            EXPECT_EQ(o.mode.reason, "repeated crash");
        }
    }
    // Terminal.
    EXPECT_EQ(fsm.update(input(9, false, good(), 0)).mode.kind, ModeKind::Intervention);
}

TEST(Fsm, CrashesAtDistinctSpotsDoNotAccumulate) {
    AutonomyFsm fsm{RecoveryConfig{}};
    for (int i = 0; i < 6; ++i) {
        const double odo = 10.0 + 5.0 * i;
        ASSERT_EQ(fsm.update(input(i, true, good(), odo)).mode.kind, ModeKind::CrashRecovery);
        fsm.update(input(i + 0.5, false, good(), odo - 1.5));
        ASSERT_EQ(fsm.mode().kind, ModeKind::RowFollow);
    }
    EXPECT_EQ(fsm.recoveries(), 6);
}

TEST(Fsm, ReverseLimitIntervenes) {
    AutonomyFsm fsm{RecoveryConfig{}};
    fsm.update(input(0, true, good(), 10.0));
    EXPECT_EQ(fsm.update(input(1, false, bad(), 6.0)).mode.kind, ModeKind::CrashRecovery);
    const FsmOutput o = fsm.update(input(2, false, bad(), 5.0));
    EXPECT_EQ(o.mode.kind, ModeKind::Intervention);
    EXPECT_EQ(o.mode.reason, "recovery exhausted");
}

TEST(Fsm, CrashDuringRecoveryIntervenes) {
    AutonomyFsm fsm{RecoveryConfig{}};
    fsm.update(input(0, true, good(), 10.0));
    const FsmOutput o = fsm.update(input(1, true, bad(), 9.9));
    EXPECT_EQ(o.mode.kind, ModeKind::Intervention);
    EXPECT_EQ(o.mode.reason, "stuck in recovery");
}

TEST(Fsm, InvalidDwellEntersRecovery) {
    AutonomyFsm fsm{RecoveryConfig{}};
    double t = 0;
    for (; t <= 1.0 + 1e-9; t += 0.05) {
        ASSERT_EQ(fsm.update(input(t, false, bad(), t)).mode.kind, ModeKind::RowFollow);
    }
    EXPECT_EQ(fsm.update(input(t, false, bad(), t)).mode.kind, ModeKind::CrashRecovery);

    RecoveryConfig off;
    off.invalid_dwell_enabled = false;
    AutonomyFsm strict{off};
    for (double s = 0; s < 5.0; s += 0.05) {
        ASSERT_EQ(strict.update(input(s, false, bad(), s)).mode.kind, ModeKind::RowFollow);
    }
}

TEST(Fsm, DwellResetsOnValidFrame) {
    AutonomyFsm fsm{RecoveryConfig{}};
    for (int i = 0; i < 100; ++i) {
        const double t = i * 0.05;
        const NavEstimate e = (i % 15 == 0) ? good() : bad();
        ASSERT_EQ(fsm.update(input(t, false, e, t)).mode.kind, ModeKind::RowFollow) << t;
    }
}

TEST(Monitor, RowCompletionHasNoIntervention) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    InterventionMonitor m{MonitorConfig{}, 0};
    for (double x = 0; x <= 200; x += 0.045) {
        ASSERT_FALSE(m.update(w, Pose2D{x, 0, 0}, ContactReport{}, Mode{}, x, 0.05));
    }
}

TEST(Monitor, DepartedLane) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    InterventionMonitor m{MonitorConfig{}, 0};
    EXPECT_FALSE(m.update(w, Pose2D{5, 0.37, 0}, ContactReport{}, Mode{}, 0, 0.05));
    const auto ev = m.update(w, Pose2D{5, 0.40, 0}, ContactReport{}, Mode{}, 0, 0.05);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->reason, "departed lane");
}

TEST(Monitor, PassesFsmInterventionThrough) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    InterventionMonitor m{MonitorConfig{}, 0};
    const auto ev = m.update(w, Pose2D{5, 0, 0}, ContactReport{},
                             Mode{ModeKind::Intervention, "repeated crash"}, 3.0, 0.05);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->reason, "repeated crash");
    EXPECT_DOUBLE_EQ(ev->t, 3.0);
}

TEST(Monitor, SustainedContactAndHeading) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    ContactReport touching;
    touching.contacts.push_back(Contact{});
    InterventionMonitor m{MonitorConfig{}, 0};
    int ticks = 0;
    std::optional<InterventionEvent> ev;
    while (!ev && ticks < 1000) ev = m.update(w, Pose2D{5, 0, 0}, touching, Mode{}, ticks++ * 0.05, 0.05);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->reason, "stuck in contact");
    EXPECT_NEAR(ticks * 0.05, 10.05, 0.051);

    InterventionMonitor h{MonitorConfig{}, 0};
    ticks = 0;
    ev.reset();
    while (!ev && ticks < 1000) ev = h.update(w, Pose2D{5, 0, 1.2}, ContactReport{}, Mode{}, ticks++ * 0.05, 0.05);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->reason, "heading runaway");
    EXPECT_NEAR(ticks * 0.05, 2.05, 0.051);
}

TEST(Monitor, LeftField) {
    const World w = build_world(FieldSpec{}, RobotSpec{}, {}, 1);
    InterventionMonitor m{MonitorConfig{}, 0};
    const auto ev = m.update(w, Pose2D{-30, 0, 0}, ContactReport{}, Mode{}, 0, 0.05);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->reason, "left field");
}
