// schedule.hpp — piecewise-polynomial time dependence of rates and Hamiltonian coefficients

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "qthermo/core.hpp"

namespace qthermo {

/// One polynomial piece, coefficients in powers of absolute time t.
struct Segment {
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::infinity();
    std::vector<double> coeffs;
};

/// Piecewise polynomial f(t) on [t_start of first piece, t_end of last piece].
///
/// Piece k covers (t_start, t_end]; the very first piece also owns its left end.
/// Pieces must be contiguous. Integrals are exact (antiderivative of each piece).
class RateSchedule {
public:
    RateSchedule() : RateSchedule(constant(0.0)) {}

    explicit RateSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
        if (segments_.empty()) throw Error(ErrorKind::InvalidArgument, "schedule needs at least one segment");
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            const Segment& s = segments_[k];
            if (!(s.t_end > s.t_start)) throw Error(ErrorKind::InvalidArgument, "segment with t_end <= t_start");
            if (s.coeffs.empty()) throw Error(ErrorKind::InvalidArgument, "segment without coefficients");
            if (k > 0 && std::abs(segments_[k - 1].t_end - s.t_start) > 1e-12)
                throw Error(ErrorKind::InvalidArgument, "segments are not contiguous");
        }
    }

    static RateSchedule constant(double value) {
        return RateSchedule({Segment{0.0, std::numeric_limits<double>::infinity(), {value}}});
    }

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    double t_min() const { return segments_.front().t_start; }
    double t_max() const { return segments_.back().t_end; }

    double operator()(double t) const { return eval(piece(t).coeffs, t); }

    /// Exact integral over [t_min, t].
    double integral(double t) const {
        check_domain(t);
        double acc = 0.0;
        for (const Segment& s : segments_) {
            if (t <= s.t_start) break;
            const double b = std::min(t, s.t_end);
            acc += antiderivative(s.coeffs, b) - antiderivative(s.coeffs, s.t_start);
        }
        return acc;
    }

    /// Breakpoints strictly inside (a, b).
    std::vector<double> breakpoints(double a, double b) const {
        std::vector<double> out;
        for (const Segment& s : segments_)
            if (s.t_end > a && s.t_end < b) out.push_back(s.t_end);
        return out;
    }

private:
    const Segment& piece(double t) const {
        check_domain(t);
        for (const Segment& s : segments_)
            if (t <= s.t_end) return s;
        return segments_.back();
    }

    void check_domain(double t) const {
        if (!std::isfinite(t) || t < t_min() - 1e-12 || t > t_max())
            throw Error(ErrorKind::OutOfDomain, "time outside the schedule's domain");
    }

    static double eval(const std::vector<double>& c, double t) {
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
        return acc;
    }

    static double antiderivative(const std::vector<double>& c, double t) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / static_cast<double>(k + 1);
        return acc * t;
    }

    std::vector<Segment> segments_;
};

} // namespace qthermo
