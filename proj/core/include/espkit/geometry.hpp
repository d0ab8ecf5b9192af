// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_GEOMETRY_HPP
#define ESPKIT_GEOMETRY_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "espkit/rng.hpp"

namespace esp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Norms used to measure distances in the primal and dual blocks.
enum class NormTag { kEuclideanL2, kSumL1, kMaxLinf };

/// L2 is self-dual; L1 and Linf are dual to each other.
NormTag dual_norm(NormTag tag);

double norm_value(NormTag tag, const Vector& v);

/// A unit-norm u (in `tag`) with <u, v> = dual norm of v. Realizes equality
/// in the pairing |<u, v>| <= ||u|| * ||v||_dual.
Vector dual_pairing_maximizer(NormTag tag, const Vector& v);

std::string to_string(NormTag tag);

/// Feasible region of one block of a saddle-point problem.
///
/// OccupancySet is the state-action polytope
///   { y >= 0, sum y = 1, lo <= sum_a y[s,a] <= hi for each state s }
/// with y stored action-major: entry (s, a) lives at index a*numStates + s.
class FeasibleSet {
 public:
  enum class Kind { kLinfBox, kSimplex, kOccupancy, kUnbounded };

  static FeasibleSet linf_box(int dim, double radius);
  static FeasibleSet simplex(int dim);
  static FeasibleSet occupancy(int num_states, int num_actions,
                               double marginal_low, double marginal_high);
  static FeasibleSet unbounded(int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool bounded() const { return kind_ != Kind::kUnbounded; }
  bool simplex_like() const {
    return kind_ == Kind::kSimplex || kind_ == Kind::kOccupancy;
  }

  double radius() const { return radius_; }             // LinfBox
  int num_states() const { return num_states_; }        // Occupancy
  int num_actions() const { return num_actions_; }      // Occupancy
  double marginal_low() const { return marginal_low_; }
  double marginal_high() const { return marginal_high_; }

  bool contains(const Vector& p, double tol = 1e-9) const;

  /// Euclidean projection. Exact for LinfBox and Simplex (sort-and-threshold);
  /// OccupancySet runs Dykstra between the simplex and the marginal window.
  Vector project(const Vector& p) const;

  /// Exact KL (entropy) projection of a nonnegative vector: argmin over the
  /// set of KL(y || q). Simplex: normalization. OccupancySet: conditionals
  /// are kept and the state marginals solve a clamped 1-D waterfilling.
  /// Only defined for simplex-like sets.
  Vector project_entropy(const Vector& q) const;

  /// sup over pairs of points of the norm distance. Throws for Unbounded and
  /// for OccupancySet norms without a closed form.
  double diameter(NormTag norm) const;

  /// A canonical interior point (center of box, uniform distribution).
  Vector center() const;

  std::string describe() const;

 private:
  FeasibleSet() = default;

  Kind kind_ = Kind::kUnbounded;
  int dim_ = 0;
  double radius_ = 0.0;
  int num_states_ = 0;
  int num_actions_ = 0;
  double marginal_low_ = 0.0;
  double marginal_high_ = 0.0;
};

/// Exact Euclidean projection onto the probability simplex.
Vector project_simplex(const Vector& p);

/// Multiplicative-weights update p'_i ∝ p_i * exp(-stepsize * g_i),
/// guarded against overflow by max-subtraction. Requires p strictly
/// positive on the simplex; the result is strictly positive.
Vector entropy_mirror_step(const Vector& point, const Vector& gradient,
                           double stepsize);

struct DykstraOptions {
  double tolerance = 1e-10;
  int max_iter = 10000;
};

/// Dykstra's alternating projections onto the intersection of component
/// sets. Converges to the Euclidean projection onto the intersection.
/// Throws if the residual stalls above tolerance (empty intersection) or
/// max_iter is exhausted.
Vector dykstra_project(const std::vector<FeasibleSet>& components,
                       const Vector& point, const DykstraOptions& opts = {});

/// Random feasible point: uniform on boxes, Dirichlet(1) on simplices,
/// projected Dirichlet on occupancy sets, uniform on [-2, 2]^d for
/// unbounded sets.
Vector sample_point(const FeasibleSet& set, Rng& rng);

}  // namespace esp

#endif  // ESPKIT_GEOMETRY_HPP
