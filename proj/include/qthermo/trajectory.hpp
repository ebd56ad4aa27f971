// trajectory.hpp — sampled time evolution: states, fixed points and entropy-production samples

#pragma once

#include <optional>
#include <vector>

#include "qthermo/core.hpp"
#include "qthermo/phase_covariant.hpp"

namespace qthermo {

/// Entropy production rate at one instant, split into entropy change and entropy flow.
struct EprSample {
    double t = 0.0;
    double sigma = 0.0;   // nats / time
    double dS = 0.0;
    double flow = 0.0;
    std::optional<Region> region;
};

struct Trajectory {
    std::vector<double> tgrid;
    std::vector<DensityMatrix> states;
    std::vector<DensityMatrix> ifps;    // empty until annotated
    std::vector<EprSample> epr;         // empty until annotated
    std::optional<double> left_state_space_at;   // set when integration stopped early

    double dt() const { return tgrid.size() > 1 ? tgrid[1] - tgrid[0] : 0.0; }

    bool uniform(double rel_tol = 1e-9) const {
        if (tgrid.size() < 2) return true;
        const double h = dt();
        if (!(h > 0.0)) return false;
        for (std::size_t k = 1; k < tgrid.size(); ++k)
            if (std::abs((tgrid[k] - tgrid[k - 1]) - h) > rel_tol * std::max(1.0, std::abs(tgrid[k])))
                return false;
        return true;
    }
};

} // namespace qthermo
