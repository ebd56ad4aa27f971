// markovianity.hpp — information flow measured by the Helstrom trace norm and the sampled
// backflow measure of non-Markovianity

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qthermo/core.hpp"
#include "qthermo/generator.hpp"
#include "qthermo/phase_covariant.hpp"
#include "qthermo/propagation.hpp"

namespace qthermo {

struct FlowSample {
    double t = 0.0;
    double distance = 0.0;     // || p1 rho1(t) - p2 rho2(t) ||_1
    double derivative = 0.0;   // central difference; one-sided at the ends so monotone data stays signed
};

struct HelstromPair {
    DensityMatrix rho1;
    DensityMatrix rho2;
    double p1 = 0.5;
};

/// Evolution by RK4 integration of an arbitrary generator.
class GeneratorDynamics {
public:
    GeneratorDynamics(GeneratorSpec gen, double t_end, double dt) : gen_(std::move(gen)), t_end_(t_end), dt_(dt) {
        const long n = step_count(t_end, dt);
        for (long k = 0; k <= n; ++k) tgrid_.push_back(static_cast<double>(k) * dt);
    }

    const std::vector<double>& tgrid() const noexcept { return tgrid_; }
    Eigen::Index dim() const noexcept { return gen_.dim(); }

    std::vector<Matrix> evolve(const DensityMatrix& rho0) const {
        const Trajectory traj = integrate(gen_, rho0, t_end_, dt_);
        std::vector<Matrix> out;
        out.reserve(traj.states.size());
        for (const auto& s : traj.states) out.push_back(s.matrix());
        return out;
    }

private:
    GeneratorSpec gen_;
    double t_end_;
    double dt_;
    std::vector<double> tgrid_;
};

/// Closed-form phase-covariant evolution with the decay functions cached on the grid.
class PhaseCovariantDynamics {
public:
    PhaseCovariantDynamics(const PhaseCovariantRates& rates, double t_end, double dt) {
        const long n = step_count(t_end, dt);
        for (long k = 0; k <= n; ++k) {
            tgrid_.push_back(static_cast<double>(k) * dt);
            decay_.push_back(decay_functions(rates, tgrid_.back()));
        }
    }

    const std::vector<double>& tgrid() const noexcept { return tgrid_; }
    Eigen::Index dim() const noexcept { return 2; }
    const std::vector<DecayFunctions>& decay() const noexcept { return decay_; }

    std::vector<Matrix> evolve(const DensityMatrix& rho0) const {
        const BlochVector v0 = state_to_bloch(rho0);
        std::vector<Matrix> out;
        out.reserve(decay_.size());
        for (const auto& f : decay_) out.push_back(bloch_matrix(propagate_bloch(f, v0)));
        return out;
    }

private:
    std::vector<double> tgrid_;
    std::vector<DecayFunctions> decay_;
};

inline std::vector<FlowSample> flow_from_distances(const std::vector<double>& tgrid, const std::vector<double>& dist) {
    const std::size_t n = tgrid.size();
    if (n < 3) throw Error(ErrorKind::GridTooCoarse, "information flow needs at least three samples");
    const double h = tgrid[1] - tgrid[0];
    std::vector<FlowSample> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double d;
        if (k == 0) d = (dist[1] - dist[0]) / h;
        else if (k == n - 1) d = (dist[k] - dist[k - 1]) / h;
        else d = (dist[k + 1] - dist[k - 1]) / (2.0 * h);
        out[k] = {tgrid[k], dist[k], d};
    }
    return out;
}

template <typename Dynamics>
std::vector<FlowSample> information_flow(const Dynamics& dyn, const HelstromPair& pair) {
    if (pair.rho1.dim() != dyn.dim() || pair.rho2.dim() != dyn.dim())
        throw Error(ErrorKind::DimensionMismatch, "information_flow");
    if (pair.p1 < 0.0 || pair.p1 > 1.0) throw Error(ErrorKind::InvalidArgument, "p1 outside [0,1]");
    const auto s1 = dyn.evolve(pair.rho1);
    const auto s2 = dyn.evolve(pair.rho2);
    std::vector<double> dist(s1.size());
    for (std::size_t k = 0; k < s1.size(); ++k)
        dist[k] = trace_norm_hermitian(pair.p1 * s1[k] - (1.0 - pair.p1) * s2[k]);
    return flow_from_distances(dyn.tgrid(), dist);
}

/// Integral of the positive part of the derivative; intervals with a sign change are split
/// at the linearly interpolated zero.
inline double positive_backflow(const std::vector<FlowSample>& flow) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < flow.size(); ++k) {
        const double h = flow[k + 1].t - flow[k].t;
        const double a = flow[k].derivative;
        const double b = flow[k + 1].derivative;
        if (a >= 0.0 && b >= 0.0) acc += 0.5 * h * (a + b);
        else if (a > 0.0 && b < 0.0) acc += 0.5 * h * a * (a / (a - b));
        else if (a < 0.0 && b > 0.0) acc += 0.5 * h * b * (b / (b - a));
    }
    return acc;
}

/// Pair k of the deterministic sample sequence: even k are orthogonal pure states, odd k are
/// independent Ginibre states.
template <typename Rng>
std::pair<DensityMatrix, DensityMatrix> sample_pair(Eigen::Index d, std::size_t k, Rng& rng) {
    if (k % 2 == 0) {
        const Matrix u = random_unitary(d, rng);
        return {DensityMatrix::from_approximate(u.col(0) * u.col(0).adjoint()),
                DensityMatrix::from_approximate(u.col(1) * u.col(1).adjoint())};
    }
    DensityMatrix a = random_state(d, rng);
    DensityMatrix b = random_state(d, rng);
    return {std::move(a), std::move(b)};
}

/// p1 grid k / (n + 1), k = 1..n; n = 9 gives {0.1, ..., 0.9}.
inline std::vector<double> weight_grid(int n_weights) {
    std::vector<double> out;
    for (int k = 1; k <= n_weights; ++k) out.push_back(static_cast<double>(k) / (n_weights + 1));
    return out;
}

struct NonMarkovResult {
    double value = 0.0;          // lower bound on the supremum over pairs and weights
    std::size_t best_pair = 0;
    double best_p1 = 0.5;
    std::vector<FlowSample> best_flow;
    std::vector<double> running_max;   // value after each pair
};

/// Maximum over the first n_pairs sampled pairs and the p1 grid of the total backflow.
/// The pair sequence depends only on the seed, so enlarging n_pairs never lowers the value.
template <typename Dynamics>
NonMarkovResult nonmarkov_measure(const Dynamics& dyn, int n_pairs, int n_weights, std::uint64_t seed) {
    if (n_pairs < 1 || n_weights < 1) throw Error(ErrorKind::InvalidArgument, "n_pairs and n_weights must be >= 1");
    std::mt19937_64 rng(seed);
    const auto weights = weight_grid(n_weights);
    NonMarkovResult out;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_pairs); ++k) {
        auto [r1, r2] = sample_pair(dyn.dim(), k, rng);
        const auto s1 = dyn.evolve(r1);
        const auto s2 = dyn.evolve(r2);
        for (double p1 : weights) {
            std::vector<double> dist(s1.size());
            for (std::size_t j = 0; j < s1.size(); ++j) dist[j] = trace_norm_hermitian(p1 * s1[j] - (1.0 - p1) * s2[j]);
            auto flow = flow_from_distances(dyn.tgrid(), dist);
            const double value = positive_backflow(flow);
            if (value > out.value) {
                out.value = value;
                out.best_pair = k;
                out.best_p1 = p1;
                out.best_flow = std::move(flow);
            }
        }
        out.running_max.push_back(out.value);
    }
    return out;
}

} // namespace qthermo
