// core.hpp — density matrices, Bloch parametrization and information-theoretic distances

#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qthermo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

enum class ErrorKind {
    NonHermitianInput,
    InvalidState,
    SupportViolation,
    DimensionMismatch,
    BlochOutOfBall,
    WrongDimension,
    BoundaryState,
    NonUniqueIFP,
    DefectiveGenerator,
    NotAState,
    DegenerateFixedPoint,
    ComplexRoot,
    DegenerateDenominator,
    OutOfDomain,
    QuadratureFailure,
    StaleFixedPoint,
    RankDeficient,
    NoPositiveEigenvalue,
    EpsilonUnderflow,
    GridTooCoarse,
    StepRejected,
    InvalidArgument,
    InvalidConfig,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BlochOutOfBall: return "BlochOutOfBall";
    case ErrorKind::WrongDimension: return "WrongDimension";
    case ErrorKind::BoundaryState: return "BoundaryState";
    case ErrorKind::NonUniqueIFP: return "NonUniqueIFP";
    case ErrorKind::DefectiveGenerator: return "DefectiveGenerator";
    case ErrorKind::NotAState: return "NotAState";
    case ErrorKind::DegenerateFixedPoint: return "DegenerateFixedPoint";
    case ErrorKind::ComplexRoot: return "ComplexRoot";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::StaleFixedPoint: return "StaleFixedPoint";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NoPositiveEigenvalue: return "NoPositiveEigenvalue";
    case ErrorKind::EpsilonUnderflow: return "EpsilonUnderflow";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::StepRejected: return "StepRejected";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so callers
/// (and the CLI) can branch on the condition instead of parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double psd = 1e-10;
inline constexpr double eigen_floor = 1e-14;
// occupation of a null direction of the second argument that counts as "in the support"
inline constexpr double support = 1e-12;
inline constexpr double bloch_ball = 1e-12;
inline constexpr double boundary = 1e-12;
} // namespace tol

inline double hermiticity_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double trace_norm_hermitian(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

/// Hermitian d x d operator (traceless perturbations, eigenmatrices, logarithms).
class HermitianObservable {
public:
    explicit HermitianObservable(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw Error(ErrorKind::DimensionMismatch, "observable must be square");
        if (m_.size() > 0 && hermiticity_defect(m_) > tol::hermitian * std::max(1.0, m_.cwiseAbs().maxCoeff()))
            throw Error(ErrorKind::NonHermitianInput, "observable is not Hermitian");
    }

    const Matrix& matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }

private:
    Matrix m_;
};

/// Validated quantum state: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0)
            throw Error(ErrorKind::DimensionMismatch, "density matrix must be square and non-empty");
        if (hermiticity_defect(m_) > tol::hermitian)
            throw Error(ErrorKind::NonHermitianInput, "density matrix is not Hermitian");
        m_ = hermitian_part(m_);
        if (std::abs(m_.trace() - Complex(1.0)) > tol::trace)
            throw Error(ErrorKind::InvalidState, "trace differs from one");
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
        if (es.eigenvalues().minCoeff() < -tol::psd)
            throw Error(ErrorKind::InvalidState, "density matrix has a negative eigenvalue");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
    }

    /// Symmetrize and renormalize before validating; for integrator output.
    static DensityMatrix from_approximate(const Matrix& m) {
        Matrix h = hermitian_part(m);
        h /= h.trace().real();
        return DensityMatrix(std::move(h));
    }

    static DensityMatrix maximally_mixed(Eigen::Index d) {
        return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d));
    }

    const Matrix& matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& eigenvectors() const noexcept { return eigenvectors_; }
    double min_eigenvalue() const { return eigenvalues_.minCoeff(); }

private:
    Matrix m_;
    Eigen::VectorXd eigenvalues_;
    Matrix eigenvectors_;
};

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static BlochVector from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
    Vec3 vec() const { return {x, y, z}; }
    double norm() const { return vec().norm(); }
};

namespace pauli {
inline Matrix identity() { return Matrix::Identity(2, 2); }
inline Matrix x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline Matrix z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
// raising operator |0><1| with sigma_z|0> = |0>
inline Matrix plus() {
    Matrix m(2, 2);
    m << 0, 1, 0, 0;
    return m;
}
inline Matrix minus() { return plus().adjoint(); }
} // namespace pauli

/// Hermitian function of a Hermitian matrix through its eigendecomposition.
template <typename F>
Matrix hermitian_function(const Eigen::VectorXd& eigenvalues, const Matrix& eigenvectors, F&& f) {
    Eigen::VectorXcd mapped(eigenvalues.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) mapped(i) = f(eigenvalues(i));
    return eigenvectors * mapped.asDiagonal() * eigenvectors.adjoint();
}

inline HermitianObservable matrix_log(const DensityMatrix& rho, double floor = tol::eigen_floor) {
    if (!(floor > 0.0)) throw Error(ErrorKind::InvalidArgument, "eigenvalue floor must be positive");
    return HermitianObservable(hermitian_part(hermitian_function(
        rho.eigenvalues(), rho.eigenvectors(), [floor](double p) { return Complex(std::log(std::max(p, floor))); })));
}

/// Von Neumann entropy in nats; eigenvalues below the floor contribute 0 log 0 = 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    double s = 0.0;
    for (double p : rho.eigenvalues())
        if (p > tol::eigen_floor) s -= p * std::log(p);
    return s;
}

/// D(rho1 || rho2) in nats, or std::nullopt when rho1 occupies a null direction of rho2.
inline std::optional<double> relative_entropy(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim()) throw Error(ErrorKind::DimensionMismatch, "relative_entropy");
    double cross = 0.0;
    const Matrix& u = rho2.eigenvectors();
    for (Eigen::Index k = 0; k < rho2.dim(); ++k) {
        const double occupation = (u.col(k).adjoint() * rho1.matrix() * u.col(k))(0, 0).real();
        const double q = rho2.eigenvalues()(k);
        if (q < tol::eigen_floor) {
            if (occupation > tol::support) return std::nullopt;
            continue;
        }
        cross += occupation * std::log(q);
    }
    return -von_neumann_entropy(rho1) - cross;
}

inline double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim()) throw Error(ErrorKind::DimensionMismatch, "trace_distance");
    return 0.5 * trace_norm_hermitian(rho1.matrix() - rho2.matrix());
}

/// Trace norm of the Helstrom matrix p1 rho1 - (1 - p1) rho2.
inline double helstrom_norm(const DensityMatrix& rho1, const DensityMatrix& rho2, double p1) {
    if (rho1.dim() != rho2.dim()) throw Error(ErrorKind::DimensionMismatch, "helstrom_norm");
    if (p1 < 0.0 || p1 > 1.0) throw Error(ErrorKind::InvalidArgument, "p1 outside [0,1]");
    return trace_norm_hermitian(p1 * rho1.matrix() - (1.0 - p1) * rho2.matrix());
}

inline Matrix bloch_matrix(const BlochVector& v) {
    return 0.5 * (pauli::identity() + v.x * pauli::x() + v.y * pauli::y() + v.z * pauli::z());
}

inline DensityMatrix bloch_to_state(const BlochVector& v) {
    if (v.norm() > 1.0 + tol::bloch_ball) throw Error(ErrorKind::BlochOutOfBall, "|v| > 1");
    return DensityMatrix(bloch_matrix(v));
}

inline BlochVector bloch_of(const Matrix& m) {
    if (m.rows() != 2 || m.cols() != 2) throw Error(ErrorKind::WrongDimension, "Bloch vectors need d = 2");
    return {(m * pauli::x()).trace().real(), (m * pauli::y()).trace().real(), (m * pauli::z()).trace().real()};
}

inline BlochVector state_to_bloch(const DensityMatrix& rho) { return bloch_of(rho.matrix()); }

/// atanh(x)/x with its removable singularity at x = 0.
inline double atanh_ratio(double x) {
    if (std::abs(x) < 1e-6) return 1.0 + x * x / 3.0;
    return std::atanh(x) / x;
}

/// Exponential-form vector r with rho = exp(r . sigma) / Z.
inline Vec3 r_vector(const BlochVector& v) {
    const double n = v.norm();
    if (n >= 1.0 - tol::boundary) throw Error(ErrorKind::BoundaryState, "|v| too close to one");
    return atanh_ratio(n) * v.vec();
}

/// Ginibre ensemble: G G^dagger / Tr, full rank almost surely.
template <typename Rng>
DensityMatrix random_state(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(n(rng), n(rng));
    Matrix r = g * g.adjoint();
    return DensityMatrix::from_approximate(r);
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with phase fix.
template <typename Rng>
Matrix random_unitary(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(n(rng), n(rng));
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        const Complex diag = r(j, j);
        q.col(j) *= diag / std::abs(diag);
    }
    return q;
}

template <typename Rng>
Matrix random_hermitian(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(n(rng), n(rng));
    return hermitian_part(g);
}

/// Traceless Hermitian matrix with unit Frobenius norm.
template <typename Rng>
Matrix random_traceless_hermitian(Eigen::Index d, Rng& rng) {
    Matrix h = random_hermitian(d, rng);
    h -= (h.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
    return h / h.norm();
}

/// Uniform point in the Bloch ball of the given maximal radius.
template <typename Rng>
BlochVector random_bloch(Rng& rng, double max_radius = 1.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec3 dir(n(rng), n(rng), n(rng));
    dir.normalize();
    return BlochVector::from(max_radius * std::cbrt(u(rng)) * dir);
}

} // namespace qthermo
