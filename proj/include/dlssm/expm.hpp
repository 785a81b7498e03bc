#pragma once

#include "dlssm/types.hpp"

namespace dlssm {

/// Dense matrix exponential by scaling-and-squaring with a degree-13 Padé
/// approximant (Higham's method with a fixed approximant order).
Mat expm(const Mat& a);

}  // namespace dlssm
