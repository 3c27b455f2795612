#pragma once

#include <memory>
#include <string>

#include "pseudoherm/manifold.hpp"

namespace pseudoherm {

// Heisenberg group H^n: coordinates (x^1..x^n, y^1..y^n, t),
// θ = dt + Σ_α (x^α dy^α − y^α dx^α), left-invariant frame
// X_α = ∂_{x^α} + y^α ∂_t, Y_α = ∂_{y^α} − x^α ∂_t, T = ∂_t,
// J X_α = Y_α, J Y_α = −X_α. Tanaka-Webster flat, vanishing torsion.
std::shared_ptr<const ModelManifold> heisenberg(int n);

// CR sphere S^{2n+1} ⊂ C^{n+1}, stored as unit ambient vectors in R^{2n+2}
// with the complex structure acting pairwise. Contact form
// θ₀ = Σ_k (x^k dy^k − y^k dx^k) pulled back; T is the Hopf field; Sasakian
// with constant holomorphic pseudohermitian sectional curvature +1.
std::shared_ptr<const ModelManifold> sphere(int n);

// Conformally scaled Heisenberg group: θ̂ = e^{κ x¹} θ. Same contact
// distribution and J; new Reeb field and Webster metric; generically nonzero
// pseudohermitian torsion for κ ≠ 0. Derivative data uses the central
// finite-difference fallback throughout.
std::shared_ptr<const ModelManifold> scaled_heisenberg(int n, double kappa);

// Parse "heisenberg:n", "sphere:n", or "scaled-heisenberg:n:kappa".
// kappa_override, when finite, replaces the id's kappa (CLI --kappa flag).
std::shared_ptr<const ModelManifold> model_from_id(const std::string& id,
                                                   double kappa_override);

}  // namespace pseudoherm
