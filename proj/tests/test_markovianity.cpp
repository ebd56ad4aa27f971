#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qthermo/markovianity.hpp"

using namespace qthermo;

namespace {

PhaseCovariantRates pdiv_rates() {
    PhaseCovariantRates r = counterexample_rates();
    r.gamma_z = RateSchedule::constant(0.1);
    r.omega_r = RateSchedule::constant(1.0);
    return r;
}

} // namespace

TEST(Flow, FiniteDifferences) {
    const std::vector<double> t{0.0, 0.1, 0.2, 0.3};
    const auto f = flow_from_distances(t, {1.0, 0.8, 0.6, 0.4});
    for (const auto& s : f) EXPECT_NEAR(s.derivative, -2.0, 1e-12);
    EXPECT_THROW(flow_from_distances({0.0, 0.1}, {1.0, 0.9}), Error);
}

TEST(Flow, PositiveBackflowIntegral) {
    std::vector<FlowSample> f{{0.0, 0, 1.0}, {1.0, 0, 1.0}, {2.0, 0, -1.0}, {3.0, 0, -1.0}, {4.0, 0, 1.0}};
    // [0,1]: 1, [1,2]: 1/4, [2,3]: 0, [3,4]: 1/4
    EXPECT_NEAR(positive_backflow(f), 1.5, 1e-15);
    std::vector<FlowSample> down{{0.0, 0, -1.0}, {1.0, 0, -2.0}};
    EXPECT_EQ(positive_backflow(down), 0.0);
}

TEST(Flow, DynamicsBackendsAgree) {
    const auto r = counterexample_rates();
    const PhaseCovariantDynamics pc(r, 2.0, 1e-2);
    const GeneratorDynamics gd(make_generator(r), 2.0, 1e-2);
    const DensityMatrix rho = bloch_to_state({0.5, 0.1, -0.3});
    const auto a = pc.evolve(rho);
    const auto b = gd.evolve(rho);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); k += 20) EXPECT_LT((a[k] - b[k]).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Flow, TraceDistanceContractsUnderPDivisibleDynamics) {
    const PhaseCovariantDynamics dyn(pdiv_rates(), 5.0, 1e-2);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        const HelstromPair pair{random_state(2, rng), random_state(2, rng), 0.3 + 0.04 * k};
        for (const auto& s : information_flow(dyn, pair)) EXPECT_LE(s.derivative, 1e-10);
    }
    EXPECT_THROW(information_flow(dyn, {DensityMatrix::maximally_mixed(2), DensityMatrix::maximally_mixed(2), 1.2}), Error);
    EXPECT_THROW(information_flow(dyn, {DensityMatrix::maximally_mixed(3), DensityMatrix::maximally_mixed(3), 0.5}), Error);
}

TEST(Measure, ZeroForPDivisible) {
    const auto res = nonmarkov_measure(PhaseCovariantDynamics(pdiv_rates(), 5.0, 1e-2), 16, 9, 1);
    EXPECT_LT(res.value, 1e-9);
}

TEST(Measure, PositiveForTheExample) {
    const PhaseCovariantDynamics dyn(counterexample_rates(), 5.0, 1e-2);
    const auto res = nonmarkov_measure(dyn, 32, 9, 1);
    EXPECT_GT(res.value, 1e-4);
    ASSERT_FALSE(res.best_flow.empty());
    // backflow only where P-divisibility fails
    for (const auto& s : res.best_flow) {
        if (s.t < 1.85) {
            EXPECT_LE(s.derivative, 1e-10) << s.t;
        }
    }
}

TEST(Measure, MonotoneInSampleCount) {
    const PhaseCovariantDynamics dyn(counterexample_rates(), 5.0, 2e-2);
    const auto small = nonmarkov_measure(dyn, 8, 5, 7);
    const auto large = nonmarkov_measure(dyn, 24, 5, 7);
    EXPECT_GE(large.value, small.value);
    for (std::size_t k = 0; k < small.running_max.size(); ++k) EXPECT_EQ(small.running_max[k], large.running_max[k]);
    for (std::size_t k = 1; k < large.running_max.size(); ++k) EXPECT_GE(large.running_max[k], large.running_max[k - 1]);
    EXPECT_THROW(nonmarkov_measure(dyn, 0, 5, 7), Error);
}

TEST(Measure, WeightGrid) {
    const auto w = weight_grid(9);
    ASSERT_EQ(w.size(), 9u);
    EXPECT_NEAR(w.front(), 0.1, 1e-15);
    EXPECT_NEAR(w.back(), 0.9, 1e-15);
}
