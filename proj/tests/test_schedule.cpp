#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qthermo/phase_covariant.hpp"
#include "qthermo/schedule.hpp"

using namespace qthermo;

TEST(Schedule, ConstantEverywhere) {
    const auto s = RateSchedule::constant(0.7);
    EXPECT_EQ(s(0.0), 0.7);
    EXPECT_EQ(s(123.0), 0.7);
    EXPECT_NEAR(s.integral(2.5), 1.75, 1e-15);
}

TEST(Schedule, CounterexampleDephasingPieces) {
    const auto gz = counterexample_rates().gamma_z;
    EXPECT_EQ(gz(0.0), 0.0);
    EXPECT_EQ(gz(1.0), 0.0);              // left piece owns its right end
    EXPECT_NEAR(gz(1.5), -0.11, 1e-15);
    EXPECT_NEAR(gz(2.0), -0.22, 1e-15);
    EXPECT_NEAR(gz(4.0), -0.22, 1e-15);
    EXPECT_NEAR(gz(1.0 + 1e-12), 0.0, 1e-12);   // continuous at the breakpoints
}

TEST(Schedule, IntegralMatchesQuadrature) {
    const auto gz = counterexample_rates().gamma_z;
    for (double t : {0.5, 1.0, 1.3, 2.0, 3.7, 5.0}) {
        double ref = 0.0;
        double a = 0.0;
        for (double b : {1.0, 2.0, t}) {
            const double hi = std::min(b, t);
            if (hi > a) ref += oracle::simpson([&](double s) { return gz(s); }, a, hi);
            a = std::max(a, hi);
        }
        EXPECT_NEAR(gz.integral(t), ref, 1e-12) << "t = " << t;
    }
    // closed form for t > 2: -0.11 - 0.22 (t - 2)
    EXPECT_NEAR(gz.integral(3.0), -0.33, 1e-15);
}

TEST(Schedule, Breakpoints) {
    const auto gz = counterexample_rates().gamma_z;
    EXPECT_EQ(gz.breakpoints(0.0, 5.0), (std::vector<double>{1.0, 2.0}));
    EXPECT_TRUE(gz.breakpoints(0.0, 1.0).empty());
    EXPECT_EQ(gz.breakpoints(1.5, 5.0), (std::vector<double>{2.0}));
}

TEST(Schedule, DomainErrors) {
    const RateSchedule s({Segment{0.0, 1.0, {1.0}}});
    EXPECT_THROW(s(2.0), Error);
    try {
        s(-1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
    }
    EXPECT_THROW(s(std::numeric_limits<double>::quiet_NaN()), Error);
    EXPECT_THROW(RateSchedule(std::vector<Segment>{}), Error);
    EXPECT_THROW(RateSchedule({Segment{0.0, 1.0, {1.0}}, Segment{1.5, 2.0, {1.0}}}), Error);
    EXPECT_THROW(RateSchedule({Segment{1.0, 1.0, {1.0}}}), Error);
}
