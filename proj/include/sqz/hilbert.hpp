// Dense operator algebra on truncated Fock spaces.
//
// Every space in this project is small (system dims up to a few dozen,
// ancillas of a handful of levels), so all operators are dense complex
// matrices. Operators and vectors are plain Eigen types; the functions here
// add the checks and the few constructions the rest of the code needs.
#pragma once

#include <complex>

#include <Eigen/Dense>

namespace sqz {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
/// A density operator is stored as an Operator; the alias marks intent.
using DensityOperator = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

Operator identity(Index dim);

/// Truncated annihilation operator: b(m-1, m) = sqrt(m).
Operator make_annihilation(Index dim);
Operator make_creation(Index dim);
Operator make_number(Index dim);

/// Two-level lowering operator |g><e| with |g> = index 0, |e> = index 1.
Operator sigma_minus();
Operator sigma_x();

/// Fock basis vector |k> in a space of dimension dim.
StateVector basis_state(Index dim, Index k);
DensityOperator projector(const StateVector& psi);

Operator adjoint(const Operator& a);
Operator commutator(const Operator& a, const Operator& b);
Operator anticommutator(const Operator& a, const Operator& b);
cplx trace(const Operator& a);
Operator kron(const Operator& a, const Operator& b);

/// exp(z A). Uses scaling and squaring with a degree-13 Pade approximant.
/// Throws IntegrityError when the input or the result is not finite.
Operator matrix_exponential(const Operator& a, cplx z);

bool is_finite(const Operator& a);
bool is_hermitian(const Operator& a, double tol);
/// max |A - A^dagger|
double hermiticity_defect(const Operator& a);
/// max |U^dagger U - 1|
double unitarity_defect(const Operator& u);

/// Sum of singular values.
double trace_norm(const Operator& a);
/// 0.5 * ||a - b||_1
double trace_distance(const Operator& a, const Operator& b);

}  // namespace sqz
