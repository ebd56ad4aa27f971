// phase_covariant.hpp — phase-covariant qubit master equation: analytic propagation, fixed
// point, divisibility / complete-positivity conditions and the non-P-divisible example map.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qthermo/core.hpp"
#include "qthermo/generator.hpp"
#include "qthermo/schedule.hpp"

namespace qthermo {

struct PhaseCovariantRates {
    RateSchedule gamma_plus;    // absorption, jump sigma_+
    RateSchedule gamma_minus;   // emission, jump sigma_-
    RateSchedule gamma_z;       // pure dephasing, jump sigma_z
    RateSchedule omega_r;       // Hamiltonian omega_r(t) sigma_z / 2
};

/// gamma_+ = 0.2, gamma_- = 0.8, omega_r = 0 and a dephasing rate that starts at zero,
/// ramps linearly on (1, 2] and stays at -0.22 afterwards.
inline PhaseCovariantRates counterexample_rates() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {
        RateSchedule::constant(0.2),
        RateSchedule::constant(0.8),
        RateSchedule({Segment{0.0, 1.0, {0.0}}, Segment{1.0, 2.0, {0.22, -0.22}}, Segment{2.0, inf, {-0.22}}}),
        RateSchedule::constant(0.0),
    };
}

inline GeneratorSpec make_generator(const PhaseCovariantRates& rates) {
    std::vector<HamiltonianTerm> h{{0.5 * pauli::z(), rates.omega_r}};
    std::vector<Channel> c{
        {pauli::z(), rates.gamma_z},
        {pauli::plus(), rates.gamma_plus},
        {pauli::minus(), rates.gamma_minus},
    };
    return GeneratorSpec(2, std::move(h), std::move(c));
}

/// Right-hand side of the Bloch-vector equations of motion.
inline Vec3 bloch_velocity(const PhaseCovariantRates& rates, double t, const Vec3& v) {
    const double gp = rates.gamma_plus(t);
    const double gm = rates.gamma_minus(t);
    const double gz = rates.gamma_z(t);
    const double w = rates.omega_r(t);
    const double transverse = 0.5 * (gp + gm) + 2.0 * gz;
    return {-w * v.y() - transverse * v.x(), w * v.x() - transverse * v.y(), -(gp + gm) * v.z() + gp - gm};
}

struct DecayFunctions {
    double lambda = 1.0;     // transverse contraction
    double lambda_z = 1.0;   // longitudinal contraction
    double t_z = 0.0;        // longitudinal shift
    double omega = 0.0;      // accumulated rotation angle
};

inline DecayFunctions decay_functions(const PhaseCovariantRates& rates, double t) {
    if (t < 0.0) throw Error(ErrorKind::OutOfDomain, "decay functions need t >= 0");
    const double gp = rates.gamma_plus.integral(t);
    const double gm = rates.gamma_minus.integral(t);
    const double gz = rates.gamma_z.integral(t);
    DecayFunctions out;
    out.lambda = std::exp(-0.5 * (gp + gm) - 2.0 * gz);
    out.lambda_z = std::exp(-gp - gm);
    out.omega = rates.omega_r.integral(t);
    if (t == 0.0) return out;

    // t_z = int_0^t (gamma_+ - gamma_-)(s) exp(-(G(t) - G(s))) ds with G = Gamma_+ + Gamma_-
    const double big_g = gp + gm;
    auto integrand = [&](double s) {
        const double g_s = rates.gamma_plus.integral(s) + rates.gamma_minus.integral(s);
        return (rates.gamma_plus(s) - rates.gamma_minus(s)) * std::exp(g_s - big_g);
    };
    std::vector<double> cuts{0.0};
    for (double b : rates.gamma_plus.breakpoints(0.0, t)) cuts.push_back(b);
    for (double b : rates.gamma_minus.breakpoints(0.0, t)) cuts.push_back(b);
    cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] <= cuts[k]) continue;
        double err = 0.0;
        acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[k], cuts[k + 1], 15, 1e-12,
                                                                             &err);
        if (!(err <= 1e-10)) throw Error(ErrorKind::QuadratureFailure, "t_z quadrature did not reach 1e-10");
    }
    out.t_z = acc;
    return out;
}

inline BlochVector propagate_bloch(const DecayFunctions& f, const BlochVector& v0) {
    const double c = std::cos(f.omega);
    const double s = std::sin(f.omega);
    return {f.lambda * (v0.x * c - v0.y * s), f.lambda * (v0.x * s + v0.y * c), v0.z * f.lambda_z + f.t_z};
}

inline BlochVector propagate_bloch(const PhaseCovariantRates& rates, const BlochVector& v0, double t) {
    if (v0.norm() > 1.0 + tol::bloch_ball) throw Error(ErrorKind::BlochOutOfBall, "initial Bloch vector");
    return propagate_bloch(decay_functions(rates, t), v0);
}

struct FixedPointBloch {
    BlochVector v;
    bool is_state = true;   // false is the NotAState flag
};

inline FixedPointBloch ifp_bloch(const PhaseCovariantRates& rates, double t) {
    const double gp = rates.gamma_plus(t);
    const double gm = rates.gamma_minus(t);
    if (gp + gm == 0.0) throw Error(ErrorKind::DegenerateFixedPoint, "gamma_+ + gamma_- = 0");
    FixedPointBloch out{{0.0, 0.0, (gp - gm) / (gp + gm)}, true};
    out.is_state = std::abs(out.v.z) <= 1.0 + tol::bloch_ball;
    return out;
}

struct PDivConditions {
    bool cond1 = true;          // gamma_+ >= 0 and gamma_- >= 0
    bool cond2 = true;          // sqrt(gamma_+ gamma_-) + 2 gamma_z >= 0
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double kossakowski = 0.0;   // sqrt(gamma_+ gamma_-) + 2 gamma_z

    bool pdiv() const { return cond1 && cond2; }
};

inline PDivConditions pdiv_conditions(const PhaseCovariantRates& rates, double t) {
    PDivConditions out;
    out.gamma_plus = rates.gamma_plus(t);
    out.gamma_minus = rates.gamma_minus(t);
    const double product = out.gamma_plus * out.gamma_minus;
    if (product < 0.0) throw Error(ErrorKind::ComplexRoot, "gamma_+ gamma_- < 0");
    out.kossakowski = std::sqrt(product) + 2.0 * rates.gamma_z(t);
    out.cond1 = out.gamma_plus >= 0.0 && out.gamma_minus >= 0.0;
    out.cond2 = out.kossakowski >= 0.0;
    return out;
}

/// First time in [t_lo, t_hi] where P-divisibility fails, located by a grid scan and
/// bisection to `tolerance`; nullopt when the conditions hold throughout.
inline std::optional<double> pdiv_violation_onset(const PhaseCovariantRates& rates, double t_lo, double t_hi,
                                                  double tolerance = 1e-10, int grid = 4000) {
    auto fails = [&](double t) { return !pdiv_conditions(rates, t).pdiv(); };
    if (fails(t_lo)) return t_lo;
    double prev = t_lo;
    for (int k = 1; k <= grid; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / grid;
        if (fails(t)) {
            double a = prev, b = t;
            while (b - a > tolerance) {
                const double m = 0.5 * (a + b);
                (fails(m) ? b : a) = m;
            }
            return b;
        }
        prev = t;
    }
    return std::nullopt;
}

struct CpConditions {
    double f1 = 0.0;
    double f2 = 0.0;
};

/// Complete positivity of the map Phi_t requires f1 <= 0 and f2 <= 0.
inline CpConditions cp_conditions(const DecayFunctions& f) {
    return {std::abs(f.lambda_z) + std::abs(f.t_z) - 1.0,
            4.0 * f.lambda * f.lambda + f.t_z * f.t_z - (1.0 + f.lambda_z) * (1.0 + f.lambda_z)};
}

inline CpConditions cp_conditions(const PhaseCovariantRates& rates, double t) {
    return cp_conditions(decay_functions(rates, t));
}

struct ReachBounds {
    double x0 = 0.0;   // initial v_z maximizing the reachable |v(t)|^2
    double p0 = 1.0;   // maximal reachable |v(t)|^2
};

/// Maximum of |v(t)|^2 over unit-length initial Bloch vectors, as a parabola in v_z(0).
/// At t = 0 the analytic t -> 0+ limits are returned.
inline ReachBounds appendix_c_bounds(const PhaseCovariantRates& rates, double t) {
    if (t < 0.0) throw Error(ErrorKind::OutOfDomain, "t < 0");
    if (t == 0.0) {
        const double gp = rates.gamma_plus(0.0);
        const double gm = rates.gamma_minus(0.0);
        const double slope = gp + gm - 4.0 * rates.gamma_z(0.0);
        if (slope == 0.0) throw Error(ErrorKind::DegenerateDenominator, "t -> 0 limit of x0 undefined");
        return {(gp - gm) / slope, 1.0};
    }
    const DecayFunctions f = decay_functions(rates, t);
    const double denom = f.lambda * f.lambda - f.lambda_z * f.lambda_z;
    if (std::abs(denom) < 1e-13) throw Error(ErrorKind::DegenerateDenominator, "lambda^2 = lambda_z^2");
    return {f.lambda_z * f.t_z / denom,
            f.lambda_z * f.lambda_z * f.t_z * f.t_z / denom + f.t_z * f.t_z + f.lambda * f.lambda};
}

enum class Region { A, B, C, D };

inline const char* to_string(Region r) {
    switch (r) {
    case Region::A: return "A";
    case Region::B: return "B";
    case Region::C: return "C";
    case Region::D: return "D";
    }
    return "?";
}

/// Bloch-sphere regions used in the positivity argument for a fixed point on the negative
/// z axis. Ties go to the earlier letter.
inline Region region_classify(const BlochVector& v, const BlochVector& v_star) {
    if (v.z >= 0.0) return Region::A;
    if (v.z <= v_star.z) return Region::B;
    if (v.norm() <= std::abs(v_star.z)) return Region::C;
    return Region::D;
}

enum class RegionDInterval { Early, Late };   // (1, 1.5] and (1.5, inf)

/// Certified lower bound on the entropy production rate in region D of the example map,
/// with v_z* = -0.6.
inline double region_d_lower_bound(double v_z, RegionDInterval interval) {
    constexpr double v_star = -0.6;
    if (!(v_z >= v_star && v_z <= 0.0)) throw Error(ErrorKind::OutOfDomain, "v_z outside [-0.6, 0]");
    const double factor = interval == RegionDInterval::Early ? 1.05 * v_z + 0.88 : 1.21 * v_z + 0.73;
    return (v_z - v_star) * factor;
}

} // namespace qthermo
