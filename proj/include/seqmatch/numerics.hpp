#pragma once

#include <functional>
#include <span>

#include "seqmatch/linalg.hpp"

namespace seqmatch {

// w * x + b. Throws ShapeError naming both operands on a dimension mismatch.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);

// Overflow-safe logistic function. Never returns exactly 0 or 1: deep in the
// tails it saturates at DBL_MIN and the largest double below 1, so
// log/likelihood code downstream always sees a value strictly inside (0, 1).
double sigmoid(double z);

// Max-subtracted softmax. Entries positive, sum 1 to within 1e-12 as long as
// the logit spread stays below the exp underflow threshold (~745).
// Throws ArgumentError on empty input.
Vector softmax(std::span<const double> logits);

// Central finite difference (f(x+h e_i) - f(x-h e_i)) / (2h) per coordinate.
// Throws NumericError naming the coordinate if f evaluates non-finite.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h);

}  // namespace seqmatch
