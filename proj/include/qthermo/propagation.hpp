// propagation.hpp — fixed-step RK4 integration of the master equation and the frozen
// (instantaneous) semigroup step

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qthermo/core.hpp"
#include "qthermo/entropy_production.hpp"
#include "qthermo/generator.hpp"
#include "qthermo/trajectory.hpp"

namespace qthermo {

namespace tol {
inline constexpr double step_trace_drift = 1e-8;
} // namespace tol

/// Number of steps of size dt covering [0, t_end]; dt must divide t_end.
inline long step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw Error(ErrorKind::InvalidArgument, "need dt > 0 and t_end >= 0");
    const double steps = t_end / dt;
    const long n = std::lround(steps);
    if (std::abs(steps - static_cast<double>(n)) > 1e-8 * std::max(1.0, steps))
        throw Error(ErrorKind::InvalidArgument, "dt does not divide t_end");
    return n;
}

inline Matrix rk4_step(const GeneratorSpec& gen, double t, const Matrix& rho, double h) {
    const Matrix k1 = apply_generator(gen, t, rho);
    const Matrix k2 = apply_generator(gen, t + 0.5 * h, rho + 0.5 * h * k1);
    const Matrix k3 = apply_generator(gen, t + 0.5 * h, rho + 0.5 * h * k2);
    const Matrix k4 = apply_generator(gen, t + h, rho + h * k3);
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Classical RK4 on [0, t_end]; each step is re-symmetrized and trace-renormalized.
/// A step that leaves the state space (non-positive dynamics) throws InvalidState, or ends the
/// trajectory early with left_state_space_at set when stop_at_exit is true.
inline Trajectory integrate(const GeneratorSpec& gen, const DensityMatrix& rho0, double t_end, double dt,
                            bool stop_at_exit = false) {
    if (rho0.dim() != gen.dim()) throw Error(ErrorKind::DimensionMismatch, "integrate");
    const long n = step_count(t_end, dt);
    Trajectory traj;
    traj.tgrid.reserve(static_cast<std::size_t>(n + 1));
    traj.states.reserve(static_cast<std::size_t>(n + 1));
    traj.tgrid.push_back(0.0);
    traj.states.push_back(rho0);
    Matrix rho = rho0.matrix();
    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        Matrix next = rk4_step(gen, t, rho, dt);
        const double drift = std::abs(next.trace() - Complex(1.0));
        if (drift > tol::step_trace_drift)
            throw Error(ErrorKind::StepRejected, "trace drift " + std::to_string(drift) + " at t = " + std::to_string(t));
        next = hermitian_part(next);
        next /= next.trace().real();
        rho = next;
        const double t_next = static_cast<double>(k + 1) * dt;
        try {
            traj.states.emplace_back(rho);
        } catch (const Error& e) {
            if (!stop_at_exit || e.kind() != ErrorKind::InvalidState) throw;
            traj.left_state_space_at = t_next;
            break;
        }
        traj.tgrid.push_back(t_next);
    }
    return traj;
}

/// Instantaneous fixed points on a time grid (shared by every trajectory on that grid).
inline std::vector<DensityMatrix> fixed_points(const GeneratorSpec& gen, const std::vector<double>& tgrid) {
    std::vector<DensityMatrix> out;
    out.reserve(tgrid.size());
    for (double t : tgrid) out.push_back(spectral_decompose(gen, t).state());
    return out;
}

/// Fills traj.ifps and traj.epr. Qubit samples get a region label when the fixed point lies on
/// the negative z axis.
inline void annotate(Trajectory& traj, const GeneratorSpec& gen, std::vector<DensityMatrix> ifps) {
    if (ifps.size() < traj.tgrid.size()) throw Error(ErrorKind::DimensionMismatch, "one fixed point per sample");
    ifps.erase(ifps.begin() + static_cast<std::ptrdiff_t>(traj.tgrid.size()), ifps.end());
    traj.ifps = std::move(ifps);
    traj.epr.clear();
    traj.epr.reserve(traj.tgrid.size());
    for (std::size_t k = 0; k < traj.tgrid.size(); ++k) {
        EprSample s = epr_sample(gen, traj.tgrid[k], traj.states[k], traj.ifps[k]);
        if (gen.dim() == 2) {
            const BlochVector vs = state_to_bloch(traj.ifps[k]);
            if (std::abs(vs.x) < tol::boundary && std::abs(vs.y) < tol::boundary && vs.z < 0.0)
                s.region = region_classify(state_to_bloch(traj.states[k]), vs);
        }
        traj.epr.push_back(s);
    }
}

inline void annotate(Trajectory& traj, const GeneratorSpec& gen) { annotate(traj, gen, fixed_points(gen, traj.tgrid)); }

/// exp(tau L_t) applied to rho with the generator frozen at time t.
inline Matrix instantaneous_map_step(const GeneratorSpec& gen, double t, const Matrix& rho, double tau) {
    if (rho.rows() != gen.dim() || rho.cols() != gen.dim())
        throw Error(ErrorKind::DimensionMismatch, "instantaneous_map_step");
    if (tau == 0.0) return rho;
    const SuperopMatrix sup = build_superop(gen, t);
    const Matrix prop = (tau * sup.matrix).exp();
    return unvec(prop * vec(rho), gen.dim());
}

} // namespace qthermo
