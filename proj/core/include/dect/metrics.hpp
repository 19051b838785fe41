#pragma once

#include <span>

#include "dect/geometry.hpp"

namespace dect {

// Normalised l2 distance in decibels: 20 log10(||x - ref|| / ||ref||).
// Returns -infinity when x == ref. Throws DomainError when ||ref|| = 0.
double error_db(std::span<const double> x, std::span<const double> reference);

// Same, restricted to pixels where roi is nonzero (when given).
double error_db(const Image& x, const Image& reference, const Image* roi = nullptr);

}  // namespace dect
