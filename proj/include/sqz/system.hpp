// Standard open systems: a two-level emitter and a truncated cavity mode.
#pragma once

#include "sqz/hilbert.hpp"

namespace sqz {

struct OpenSystem {
    /// Hamiltonian in the frame rotating with the pulse carrier.
    Operator H;
    /// Coupling (jump) operator to the monitored channel.
    Operator L;
    /// Initial pure state.
    StateVector psi0;

    Index dim() const { return H.rows(); }
    /// Throws ValidationError when shapes disagree or H is not Hermitian.
    void validate() const;
};

/// H = delta |e><e|, L = sqrt(gamma) sigma_-, |g> = 0, |e> = 1.
OpenSystem two_level(double gamma, double delta, bool excited);
/// H = delta a^dagger a, L = sqrt(gamma) a, starting in Fock state `fock`.
OpenSystem cavity(Index dim, double gamma, double delta, Index fock = 0);

}  // namespace sqz
