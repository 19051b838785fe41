#pragma once

#include <span>
#include <vector>

#include "dect/geometry.hpp"

namespace dect {

// Horizontal and vertical forward differences with a reflective boundary
// (the difference across the last column/row is zero). The output of an
// R x C image is 2*R*C values: all horizontal differences, then all
// vertical ones, each block row-major.
void difference(const Image& x, std::span<double> out);
std::vector<double> difference(const Image& x);

// Adjoint of difference(); writes (not accumulates) into `out`.
void difference_adjoint(std::span<const double> d, Image& out);
Image difference_adjoint(std::span<const double> d, int rows, int cols);

}  // namespace dect
