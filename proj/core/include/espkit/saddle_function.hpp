// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_SADDLE_FUNCTION_HPP
#define ESPKIT_SADDLE_FUNCTION_HPP

#include <optional>

#include "espkit/geometry.hpp"

namespace esp {

enum class Side { kMinimizeX, kMaximizeY };

struct BestResponse {
  Vector point;
  double value = 0.0;
};

/// Coefficient of an entropy term the solver handles inside its prox steps
/// instead of through gradients (whose entropy part blows up at the
/// simplex boundary). Zero means no composite term in that block.
struct CompositeEntropy {
  double coef_x = 0.0;  // + coef * sum x log x  (convex penalty on the min block)
  double coef_y = 0.0;  // - coef * sum y log y  (concave penalty on the max block)
};

/// A convex-concave function of two blocks over feasible sets, the object
/// every solver routine operates on. `value` is the full objective including
/// any regularizer; `grad_x`/`grad_y` cover only the smooth part (everything
/// except composite entropy terms).
class SaddleFunction {
 public:
  virtual ~SaddleFunction() = default;

  virtual const FeasibleSet& set_x() const = 0;
  virtual const FeasibleSet& set_y() const = 0;

  virtual double value(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y(const Vector& x, const Vector& y) const = 0;

  virtual CompositeEntropy composite() const { return {}; }

  /// Exact optimizer of one block with the other fixed, when the structure
  /// admits one (separable clamp, vertex maximization, softmax, ...).
  virtual std::optional<BestResponse> exact_best_response(
      Side /*side*/, const Vector& /*fixed*/) const {
    return std::nullopt;
  }
};

}  // namespace esp

#endif  // ESPKIT_SADDLE_FUNCTION_HPP
