#pragma once

#include <string>
#include <vector>

#include "koopman/system.hpp"

namespace koopman::builtin {

// ẋ₁ = −x₂, ẋ₂ = x₁ − x₂ + x₁²x₂ (Van der Pol in reverse time).
DynamicalSystem example3();
// ẋ₁ = x₂, ẋ₂ = −2x₁ + x₁³/3 − x₂.
DynamicalSystem example4();
// Stable node with non-analytic eigenfunctions on [−2,2]².
DynamicalSystem example5();
// θ̇ = 1, ṙ = (2 + cos 6θ − cos 10θ) r(1 − r²) written in Cartesian form.
DynamicalSystem example6();
// Van der Pol in forward time.
DynamicalSystem example7();
// θ̇ = 1, ṙ = r(1 − r) written in Cartesian form.
DynamicalSystem circle();
// ẋ = −x³.
DynamicalSystem cubic_decay();

// Lookup by name ("example3" … "example7", "circle", "cubic"). Throws Error
// for unknown names.
DynamicalSystem by_name(const std::string& name);
std::vector<std::string> names();

}  // namespace koopman::builtin
