#include "sqz/hilbert.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

void require_square(const Operator& a, const char* what) {
    require(a.rows() == a.cols(), std::string(what) + ": operator must be square");
}

void require_same_dim(const Operator& a, const Operator& b, const char* what) {
    require_square(a, what);
    require_square(b, what);
    require(a.rows() == b.rows(),
            std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) + " vs " +
                std::to_string(b.rows()) + ")");
}

}  // namespace

Operator identity(Index dim) {
    require(dim >= 1, "identity: dim must be positive");
    return Operator::Identity(dim, dim);
}

Operator make_annihilation(Index dim) {
    require(dim >= 2, "make_annihilation: dim must be at least 2");
    Operator b = Operator::Zero(dim, dim);
    for (Index m = 1; m < dim; ++m) b(m - 1, m) = std::sqrt(static_cast<double>(m));
    return b;
}

Operator make_creation(Index dim) { return make_annihilation(dim).adjoint(); }

Operator make_number(Index dim) {
    require(dim >= 1, "make_number: dim must be positive");
    Operator n = Operator::Zero(dim, dim);
    for (Index m = 0; m < dim; ++m) n(m, m) = static_cast<double>(m);
    return n;
}

Operator sigma_minus() { return make_annihilation(2); }

Operator sigma_x() {
    Operator x = Operator::Zero(2, 2);
    x(0, 1) = 1.0;
    x(1, 0) = 1.0;
    return x;
}

StateVector basis_state(Index dim, Index k) {
    require(dim >= 1 && k >= 0 && k < dim, "basis_state: index out of range");
    StateVector v = StateVector::Zero(dim);
    v(k) = 1.0;
    return v;
}

DensityOperator projector(const StateVector& psi) { return psi * psi.adjoint(); }

Operator adjoint(const Operator& a) { return a.adjoint(); }

Operator commutator(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "commutator");
    return a * b - b * a;
}

Operator anticommutator(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "anticommutator");
    return a * b + b * a;
}

cplx trace(const Operator& a) {
    require_square(a, "trace");
    return a.trace();
}

Operator kron(const Operator& a, const Operator& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

bool is_finite(const Operator& a) { return a.allFinite(); }

Operator matrix_exponential(const Operator& a, cplx z) {
    require_square(a, "matrix_exponential");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || !a.allFinite())
        throw IntegrityError("matrix_exponential: non-finite input");
    const Operator scaled = z * a;
    Operator result = scaled.exp();
    if (!result.allFinite())
        throw IntegrityError("matrix_exponential: overflow (1-norm of argument " +
                             std::to_string(scaled.cwiseAbs().colwise().sum().maxCoeff()) + ")");
    return result;
}

double hermiticity_defect(const Operator& a) {
    require_square(a, "hermiticity_defect");
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& a, double tol) { return hermiticity_defect(a) <= tol; }

double unitarity_defect(const Operator& u) {
    require_square(u, "unitarity_defect");
    return (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

double trace_norm(const Operator& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Operator> svd(a);
    return svd.singularValues().sum();
}

double trace_distance(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "trace_distance");
    return 0.5 * trace_norm(a - b);
}

}  // namespace sqz
