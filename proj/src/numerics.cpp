#include "seqmatch/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"

namespace seqmatch {

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.cols != x.size()) {
    throw ShapeError("affine: matrix is " + std::to_string(w.rows) + "x" +
                     std::to_string(w.cols) + " but vector has dim " +
                     std::to_string(x.size()));
  }
  if (b.size() != w.rows) {
    throw ShapeError("affine: matrix has " + std::to_string(w.rows) +
                     " rows but bias has dim " + std::to_string(b.size()));
  }
  Vector out(w.rows);
  kernels::active().matvec(w.data.data(), w.rows, w.cols, x.data(), b.data(),
                           out.data());
  return out;
}

double sigmoid(double z) {
  double r;
  if (z >= 0.0) {
    r = 1.0 / (1.0 + std::exp(-z));
  } else {
    double t = std::exp(z);
    r = t / (1.0 + t);
  }
  if (r <= 0.0) return std::numeric_limits<double>::min();
  if (r >= 1.0) return 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return r;
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty input");
  double m = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    denom += out[i];
  }
  kernels::active().scale(out.size(), 1.0 / denom, out.data());
  return out;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite_diff_grad: step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double saved = probe[i];
    probe[i] = saved + h;
    double fp = f(probe);
    probe[i] = saved - h;
    double fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: f is not finite at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace seqmatch
