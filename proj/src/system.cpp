#include "sqz/system.hpp"

#include <cmath>

#include "sqz/errors.hpp"

namespace sqz {

void OpenSystem::validate() const {
    require(H.rows() >= 1 && H.rows() == H.cols(), "system: H must be square");
    require(L.rows() == H.rows() && L.cols() == H.cols(), "system: L must match H");
    require(psi0.size() == H.rows(), "system: initial state must match H");
    require(H.allFinite() && L.allFinite() && psi0.allFinite(), "system: operators must be finite");
    require(is_hermitian(H, 1e-12), "system: H must be Hermitian");
    require(std::abs(psi0.norm() - 1.0) < 1e-10, "system: initial state must be normalized");
}

OpenSystem two_level(double gamma, double delta, bool excited) {
    require(gamma >= 0.0, "system.gamma must be non-negative");
    return {delta * make_number(2), std::sqrt(gamma) * sigma_minus(), basis_state(2, excited ? 1 : 0)};
}

OpenSystem cavity(Index dim, double gamma, double delta, Index fock) {
    require(dim >= 2, "system.dim must be at least 2");
    require(gamma >= 0.0, "system.gamma must be non-negative");
    require(fock >= 0 && fock < dim, "system.initial must be a Fock level below dim");
    return {delta * make_number(dim), std::sqrt(gamma) * make_annihilation(dim),
            basis_state(dim, fock)};
}

}  // namespace sqz
