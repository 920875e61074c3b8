#pragma once

// Mesh-free exterior calculus on R^n: forms sampled as black boxes, their
// exterior derivative as normalized boundary flux over small cubes, and
// integration over singular blocks and chains.

#include "chain_io.hpp"
#include "chains.hpp"
#include "cloud.hpp"
#include "deriv.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "field.hpp"
#include "integrate.hpp"
#include "multiindex.hpp"
#include "tensor.hpp"
#include "verify.hpp"

namespace fluxcalc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fluxcalc
