// generator.hpp — time-local GKSL-form generators, their superoperator matrices and spectra

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qthermo/core.hpp"
#include "qthermo/schedule.hpp"

namespace qthermo {

struct HamiltonianTerm {
    Matrix op;              // Hermitian, constant
    RateSchedule coefficient;
};

struct Channel {
    Matrix jump;            // L_k
    RateSchedule rate;      // gamma_k(t), any sign
};

/// L_t[X] = -i[H(t), X] + sum_k gamma_k(t) (L_k X L_k^dagger - 1/2 {L_k^dagger L_k, X}),
/// with H(t) = sum_h c_h(t) H_h.
class GeneratorSpec {
public:
    GeneratorSpec(Eigen::Index dim, std::vector<HamiltonianTerm> hamiltonian, std::vector<Channel> channels)
        : dim_(dim), hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)) {
        if (dim_ < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
        for (const auto& h : hamiltonian_) {
            if (h.op.rows() != dim_ || h.op.cols() != dim_)
                throw Error(ErrorKind::DimensionMismatch, "Hamiltonian term has wrong shape");
            if (hermiticity_defect(h.op) > tol::hermitian * std::max(1.0, h.op.cwiseAbs().maxCoeff()))
                throw Error(ErrorKind::NonHermitianInput, "Hamiltonian term is not Hermitian");
        }
        for (const auto& c : channels_)
            if (c.jump.rows() != dim_ || c.jump.cols() != dim_)
                throw Error(ErrorKind::DimensionMismatch, "jump operator has wrong shape");
    }

    Eigen::Index dim() const noexcept { return dim_; }
    const std::vector<HamiltonianTerm>& hamiltonian_terms() const noexcept { return hamiltonian_; }
    const std::vector<Channel>& channels() const noexcept { return channels_; }

    Matrix hamiltonian(double t) const {
        Matrix h = Matrix::Zero(dim_, dim_);
        for (const auto& term : hamiltonian_) h += term.coefficient(t) * term.op;
        return h;
    }

    std::vector<double> rates(double t) const {
        std::vector<double> out;
        out.reserve(channels_.size());
        for (const auto& c : channels_) out.push_back(c.rate(t));
        return out;
    }

private:
    Eigen::Index dim_;
    std::vector<HamiltonianTerm> hamiltonian_;
    std::vector<Channel> channels_;
};

inline Matrix apply_generator(const GeneratorSpec& gen, double t, const Matrix& x) {
    if (x.rows() != gen.dim() || x.cols() != gen.dim())
        throw Error(ErrorKind::DimensionMismatch, "apply_generator");
    const Matrix h = gen.hamiltonian(t);
    Matrix out = Complex(0, -1) * (h * x - x * h);
    for (const auto& c : gen.channels()) {
        const double g = c.rate(t);
        if (g == 0.0) continue;
        const Matrix& l = c.jump;
        const Matrix ldl = l.adjoint() * l;
        out += g * (l * x * l.adjoint() - 0.5 * (ldl * x + x * ldl));
    }
    return out;
}

/// Heisenberg-picture generator, Tr{A L_t[rho]} = Tr{L_t^dagger[A] rho}.
inline Matrix apply_adjoint_generator(const GeneratorSpec& gen, double t, const Matrix& a) {
    if (a.rows() != gen.dim() || a.cols() != gen.dim())
        throw Error(ErrorKind::DimensionMismatch, "apply_adjoint_generator");
    const Matrix h = gen.hamiltonian(t);
    Matrix out = Complex(0, 1) * (h * a - a * h);
    for (const auto& c : gen.channels()) {
        const double g = c.rate(t);
        if (g == 0.0) continue;
        const Matrix& l = c.jump;
        const Matrix ldl = l.adjoint() * l;
        out += g * (l.adjoint() * a * l - 0.5 * (ldl * a + a * ldl));
    }
    return out;
}

// Column stacking: vec(X)[i + d*j] = X(i, j), which is Eigen's column-major storage,
// so vec(A X B) = (B^T kron A) vec(X).
inline Vector vec(const Matrix& x) { return x.reshaped(); }

inline Matrix unvec(const Vector& v, Eigen::Index d) { return v.reshaped(d, d); }

struct SuperopMatrix {
    Matrix matrix;   // d^2 x d^2
    Eigen::Index dim = 0;
    double t = 0.0;

    Matrix apply(const Matrix& x) const { return unvec(matrix * vec(x), dim); }
};

inline SuperopMatrix build_superop(const GeneratorSpec& gen, double t) {
    using Eigen::kroneckerProduct;
    const Eigen::Index d = gen.dim();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix h = gen.hamiltonian(t);
    Matrix m = Complex(0, -1) * (Matrix(kroneckerProduct(id, h)) - Matrix(kroneckerProduct(h.transpose(), id)));
    for (const auto& c : gen.channels()) {
        const double g = c.rate(t);
        if (g == 0.0) continue;
        const Matrix& l = c.jump;
        const Matrix ldl = l.adjoint() * l;
        m += g * (Matrix(kroneckerProduct(l.conjugate(), l))
                  - 0.5 * (Matrix(kroneckerProduct(id, ldl)) + Matrix(kroneckerProduct(ldl.transpose(), id))));
    }
    return {std::move(m), d, t};
}

struct SpectralDecomposition {
    double t = 0.0;
    Eigen::VectorXcd eigenvalues;
    std::vector<Matrix> eigenmatrices;   // unit Frobenius norm
    Eigen::Index null_index = -1;
    Matrix fixed_point;                  // trace-one Hermitian null eigenmatrix
    bool ifp_is_state = false;           // false is the NotAState marker
    std::optional<DensityMatrix> ifp;
    std::optional<BlochVector> ifp_bloch;
    double eigenvector_condition = 1.0;
    double spectral_scale = 0.0;         // max |lambda_i|

    const DensityMatrix& state() const {
        if (!ifp) throw Error(ErrorKind::NotAState, "instantaneous fixed point is not a state");
        return *ifp;
    }
};

namespace tol {
inline constexpr double null_space = 1e-9;
inline constexpr double not_a_state = 1e-9;
inline constexpr double ifp_trace = 1e-12;
inline constexpr double defective_condition = 1e12;
} // namespace tol

/// Nearest state to an almost-PSD trace-one Hermitian matrix (clips tiny negative eigenvalues).
inline DensityMatrix clip_to_state(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
    Eigen::VectorXd p = es.eigenvalues().cwiseMax(0.0);
    p /= p.sum();
    return DensityMatrix(hermitian_part(es.eigenvectors() * p.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint()));
}

inline SpectralDecomposition spectral_decompose(const SuperopMatrix& sup) {
    const Eigen::Index d = sup.dim;
    Eigen::ComplexEigenSolver<Matrix> es(sup.matrix);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::DefectiveGenerator, "eigensolver did not converge");

    SpectralDecomposition out;
    out.t = sup.t;
    out.eigenvalues = es.eigenvalues();
    Matrix vecs = es.eigenvectors();
    for (Eigen::Index k = 0; k < vecs.cols(); ++k) vecs.col(k).normalize();
    Eigen::JacobiSVD<Matrix> svd(vecs);
    const auto& s = svd.singularValues();
    out.eigenvector_condition = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (out.eigenvector_condition > tol::defective_condition)
        throw Error(ErrorKind::DefectiveGenerator, "eigenvector matrix is numerically singular");
    for (Eigen::Index k = 0; k < vecs.cols(); ++k) out.eigenmatrices.push_back(unvec(vecs.col(k), d));

    out.spectral_scale = out.eigenvalues.cwiseAbs().maxCoeff();
    const double zero = tol::null_space * out.spectral_scale;
    Eigen::Index count = 0;
    Eigen::Index best = 0;
    for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k) {
        if (std::abs(out.eigenvalues(k)) <= zero) ++count;
        if (std::abs(out.eigenvalues(k)) < std::abs(out.eigenvalues(best))) best = k;
    }
    if (count != 1) throw Error(ErrorKind::NonUniqueIFP, "null space dimension is " + std::to_string(count));
    out.null_index = best;

    const Matrix& raw = out.eigenmatrices[static_cast<std::size_t>(best)];
    const Complex tr = raw.trace();
    if (std::abs(tr) < tol::ifp_trace) throw Error(ErrorKind::NonUniqueIFP, "null eigenmatrix is traceless");
    out.fixed_point = hermitian_part(raw / tr);

    Eigen::SelfAdjointEigenSolver<Matrix> fe(out.fixed_point, Eigen::EigenvaluesOnly);
    out.ifp_is_state = fe.eigenvalues().minCoeff() >= -tol::not_a_state;
    if (out.ifp_is_state) {
        out.ifp = clip_to_state(out.fixed_point);
        if (d == 2) out.ifp_bloch = state_to_bloch(*out.ifp);
    }
    return out;
}

inline SpectralDecomposition spectral_decompose(const GeneratorSpec& gen, double t) {
    return spectral_decompose(build_superop(gen, t));
}

/// Structural checks on a superoperator matrix: trace destroying (L^dagger[1] = 0) and
/// Hermiticity preserving, probed on random inputs.
inline bool adjoint_check(const SuperopMatrix& sup, std::uint64_t seed = 7, int samples = 16) {
    const Eigen::Index d = sup.dim;
    const double scale = std::max(1.0, sup.matrix.cwiseAbs().maxCoeff());
    const Vector one = vec(Matrix::Identity(d, d));
    // vec(1)^dagger M vec(X) = Tr{L[X]} for every X
    if ((one.adjoint() * sup.matrix).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < samples; ++k) {
        Matrix x(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) x(i, j) = Complex(n(rng), n(rng));
        const Matrix lx = sup.apply(x);
        const Matrix lxd = sup.apply(x.adjoint());
        if ((lxd - lx.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale * std::max(1.0, x.norm())) return false;
    }
    return true;
}

/// Checks Tr{A L_t[rho]} = Tr{L_t^dagger[A] rho} with the Heisenberg-picture generator on
/// random (observable, state) pairs, L_t^dagger[1] = 0, and the structural checks above.
inline bool adjoint_check(const GeneratorSpec& gen, double t, std::uint64_t seed = 7, int samples = 16) {
    const Eigen::Index d = gen.dim();
    const SuperopMatrix sup = build_superop(gen, t);
    const double scale = std::max(1.0, sup.matrix.cwiseAbs().maxCoeff());
    if (apply_adjoint_generator(gen, t, Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < samples; ++k) {
        const Matrix a = random_hermitian(d, rng);
        const DensityMatrix rho = random_state(d, rng);
        const Complex lhs = (a * sup.apply(rho.matrix())).trace();
        const Complex rhs = (apply_adjoint_generator(gen, t, a) * rho.matrix()).trace();
        if (std::abs(lhs - rhs) > 1e-10 * scale * std::max(1.0, a.norm())) return false;
    }
    return adjoint_check(sup, seed, samples);
}

// ---------------------------------------------------------------------------------------------
// Kossakowski criterion: P-divisible at t iff <j|L_t(|i><i|)|j> >= 0 for all orthonormal
// bases and i != j.

struct KossakowskiValue {
    double value = std::numeric_limits<double>::infinity();
    Eigen::Index from = 0;   // i: the populated state |i><i|
    Eigen::Index to = 0;     // j: the probed state
};

inline KossakowskiValue kossakowski_in_basis(const SuperopMatrix& sup, const Matrix& basis) {
    const Eigen::Index d = sup.dim;
    KossakowskiValue worst;
    for (Eigen::Index i = 0; i < d; ++i) {
        const Matrix li = sup.apply(basis.col(i) * basis.col(i).adjoint());
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            const double v = (basis.col(j).adjoint() * li * basis.col(j))(0, 0).real();
            if (v < worst.value) worst = {v, i, j};
        }
    }
    return worst;
}

struct PDivVerdict {
    bool pdiv = true;
    double worst_value = std::numeric_limits<double>::infinity();
    Matrix witness_basis;          // columns: the basis attaining worst_value
    Eigen::Index from = 0;
    Eigen::Index to = 0;

    /// Present only when the scan found a violation.
    std::optional<Matrix> violating_basis() const {
        if (pdiv) return std::nullopt;
        return witness_basis;
    }
};

namespace tol {
inline constexpr double kossakowski = 1e-10;
} // namespace tol

/// Randomized scan: the computational basis, n_bases Haar bases, then a deterministic
/// hill-climb of local unitary rotations from the worst basis found.
inline PDivVerdict kossakowski_scan(const GeneratorSpec& gen, double t, int n_bases, std::uint64_t seed,
                                    int refine_steps = 200) {
    if (n_bases < 1) throw Error(ErrorKind::InvalidArgument, "n_bases must be at least 1");
    const Eigen::Index d = gen.dim();
    if (d < 2) return {true, std::numeric_limits<double>::infinity(), Matrix::Identity(d, d), 0, 0};
    const SuperopMatrix sup = build_superop(gen, t);
    std::mt19937_64 rng(seed);

    PDivVerdict out;
    auto consider = [&](const Matrix& u) {
        const KossakowskiValue kv = kossakowski_in_basis(sup, u);
        if (kv.value < out.worst_value) {
            out.worst_value = kv.value;
            out.witness_basis = u;
            out.from = kv.from;
            out.to = kv.to;
            return true;
        }
        return false;
    };
    consider(Matrix::Identity(d, d));
    for (int k = 0; k < n_bases; ++k) consider(random_unitary(d, rng));

    double step = 0.3;
    for (int k = 0; k < refine_steps && step > 1e-8; ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(random_hermitian(d, rng));
        const Matrix rot = hermitian_function(es.eigenvalues(), es.eigenvectors(),
                                              [step](double x) { return std::exp(Complex(0, step * x)); });
        if (!consider(out.witness_basis * rot)) step *= 0.8;
    }
    out.pdiv = out.worst_value >= -tol::kossakowski;
    return out;
}

} // namespace qthermo
