// io.hpp — JSON documents for rate schedules and generators, locale-independent CSV output
//
// Schedule:   a number (constant), or
//             {"segments": [{"t_start": 0, "t_end": 1, "poly_coeffs": [c0, c1, ...]}, ...]}
//             with f(t) = c0 + c1 t + ... on (t_start, t_end]; "t_end": null means +infinity.
// Matrix:     rows of [re, im] pairs, e.g. [[[0,0],[1,0]],[[0,0],[0,0]]]; a bare number is
//             accepted for a purely real entry.
// Generator:  {"dim": d, "hamiltonian_kind": "terms" | "none",
//              "hamiltonian": [{"operator": M, "coefficient": S}, ...],
//              "jump_ops":    [{"operator": M, "rate": S}, ...]}
//             or {"model": "phase_covariant", "rates": {"gamma_plus": S, "gamma_minus": S,
//                                                        "gamma_z": S, "omega_r": S}}
//             or {"model": "counterexample"}.

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qthermo/core.hpp"
#include "qthermo/generator.hpp"
#include "qthermo/phase_covariant.hpp"
#include "qthermo/schedule.hpp"

namespace qthermo::io {

using nlohmann::json;

inline RateSchedule schedule_from_json(const json& j) {
    if (j.is_number()) return RateSchedule::constant(j.get<double>());
    if (!j.is_object() || !j.contains("segments"))
        throw Error(ErrorKind::InvalidConfig, "schedule must be a number or an object with \"segments\"");
    std::vector<Segment> segs;
    for (const auto& s : j.at("segments")) {
        Segment seg;
        seg.t_start = s.value("t_start", 0.0);
        seg.t_end = (!s.contains("t_end") || s.at("t_end").is_null()) ? std::numeric_limits<double>::infinity()
                                                                        : s.at("t_end").get<double>();
        seg.coeffs = s.at("poly_coeffs").get<std::vector<double>>();
        segs.push_back(std::move(seg));
    }
    return RateSchedule(std::move(segs));
}

inline json schedule_to_json(const RateSchedule& s) {
    json segs = json::array();
    for (const auto& seg : s.segments()) {
        json js = {{"t_start", seg.t_start}, {"poly_coeffs", seg.coeffs}};
        js["t_end"] = std::isfinite(seg.t_end) ? json(seg.t_end) : json(nullptr);
        segs.push_back(std::move(js));
    }
    return {{"segments", segs}};
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw Error(ErrorKind::InvalidConfig, "matrix must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorKind::InvalidConfig, "ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row.at(static_cast<std::size_t>(c));
            if (e.is_number()) m(r, c) = Complex(e.get<double>(), 0.0);
            else if (e.is_array() && e.size() == 2) m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
            else throw Error(ErrorKind::InvalidConfig, "matrix entries are [re, im] pairs");
        }
    }
    return m;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline PhaseCovariantRates rates_from_json(const json& j) {
    PhaseCovariantRates r;
    r.gamma_plus = schedule_from_json(j.value("gamma_plus", json(0.0)));
    r.gamma_minus = schedule_from_json(j.value("gamma_minus", json(0.0)));
    r.gamma_z = schedule_from_json(j.value("gamma_z", json(0.0)));
    r.omega_r = schedule_from_json(j.value("omega_r", json(0.0)));
    return r;
}

inline json rates_to_json(const PhaseCovariantRates& r) {
    return {{"gamma_plus", schedule_to_json(r.gamma_plus)},
            {"gamma_minus", schedule_to_json(r.gamma_minus)},
            {"gamma_z", schedule_to_json(r.gamma_z)},
            {"omega_r", schedule_to_json(r.omega_r)}};
}

/// Phase-covariant rates of a generator document, when it describes that model.
inline std::optional<PhaseCovariantRates> phase_covariant_from_json(const json& j) {
    const std::string model = j.value("model", std::string{});
    if (model == "counterexample") return counterexample_rates();
    if (model == "phase_covariant") return rates_from_json(j.at("rates"));
    return std::nullopt;
}

inline GeneratorSpec generator_from_json(const json& j) {
    try {
        if (auto rates = phase_covariant_from_json(j)) return make_generator(*rates);
        const auto dim = j.at("dim").get<Eigen::Index>();
        std::vector<HamiltonianTerm> h;
        if (j.value("hamiltonian_kind", std::string("terms")) != "none" && j.contains("hamiltonian"))
            for (const auto& term : j.at("hamiltonian"))
                h.push_back({matrix_from_json(term.at("operator")), schedule_from_json(term.value("coefficient", json(1.0)))});
        std::vector<Channel> c;
        if (j.contains("jump_ops"))
            for (const auto& ch : j.at("jump_ops"))
                c.push_back({matrix_from_json(ch.at("operator")), schedule_from_json(ch.value("rate", json(1.0)))});
        return GeneratorSpec(dim, std::move(h), std::move(c));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
}

inline json generator_to_json(const GeneratorSpec& g) {
    json h = json::array();
    for (const auto& term : g.hamiltonian_terms())
        h.push_back({{"operator", matrix_to_json(term.op)}, {"coefficient", schedule_to_json(term.coefficient)}});
    json c = json::array();
    for (const auto& ch : g.channels())
        c.push_back({{"operator", matrix_to_json(ch.jump)}, {"rate", schedule_to_json(ch.rate)}});
    return {{"dim", g.dim()},
            {"hamiltonian_kind", h.empty() ? "none" : "terms"},
            {"hamiltonian", h},
            {"jump_ops", c}};
}

// ---------------------------------------------------------------------------------------------
// CSV: '.' decimal separator and '\n' line endings regardless of the global locale.

/// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(const std::vector<std::string>& cols) { write_row(cols); }

    void row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (k) line += ',';
            line += format_double(values[k]);
        }
        line += '\n';
        os_ << line;
    }

    void write_row(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) line += ',';
            line += cells[k];
        }
        line += '\n';
        os_ << line;
    }

private:
    std::ostream& os_;
};

/// FNV-1a over the compact dump; stable across platforms for identical documents.
inline std::string config_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = hex[h & 0xF];
    return out;
}

} // namespace qthermo::io
