// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_PROBLEMS_HPP
#define ESPKIT_PROBLEMS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "espkit/geometry.hpp"
#include "espkit/rng.hpp"
#include "espkit/saddle_function.hpp"

namespace esp {

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

/// One draw for the strongly convex-concave quadratic family:
/// Phi_xi(x,y) = (mu_x/2)|x|^2 - a'x - (mu_y/2)|y|^2 + b'y + x'Cy.
struct QuadraticDatum {
  Vector a;
  Vector b;
};

/// One sampled payoff matrix of a stochastic matrix game.
struct GameDatum {
  Matrix payoff;
};

/// One sampled transition per (state, action) plus sampled rewards.
struct MdpDatum {
  Eigen::MatrixXi next_state;  // numStates x numActions
  Matrix reward;               // numStates x numActions
};

using SampleDatum = std::variant<QuadraticDatum, GameDatum, MdpDatum>;

struct SampleSet {
  std::vector<SampleDatum> data;
  std::uint64_t seed = 0;
  int n() const { return static_cast<int>(data.size()); }
};

/// Copy of `samples` with position i replaced. The input is not modified.
SampleSet leave_one_out_swap(const SampleSet& samples, int i,
                             SampleDatum replacement);

// ---------------------------------------------------------------------------
// Constants and regularizers
// ---------------------------------------------------------------------------

/// Known constants of a problem instance, measured in the problem's norms.
struct ProblemConstants {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double lip_x_weak = 0.0;   // sup_y sqrt(E[l_x(xi,y)^2])
  double lip_y_weak = 0.0;
  double lip_x_strong = 0.0; // sqrt(E[sup_y l_x(xi,y)^2])
  double lip_y_strong = 0.0;
  double grad_lip_x = 0.0;   // L_x
  double grad_lip_y = 0.0;   // L_y
  double grad_lip_xy = 0.0;  // L_xy
  double diam_x = 0.0;
  double diam_y = 0.0;
  double grad_second_moment_opt = 0.0;    // E[|grad Phi_xi(x*,y*)|_2^2]
  double grad_x_second_moment_opt = 0.0;  // E[|grad_x Phi_xi(x*,y*)|_2^2]
  double grad_y_second_moment_opt = 0.0;
  bool lipschitz_estimated = false;       // true when sampled, not analytic

  /// max(L_x, L_y, L_xy) / min(mu_x, mu_y); throws when a modulus is zero.
  double condition_number() const;
};

/// Strongly convex-strongly concave penalty added to an empirical objective.
/// Quadratic terms are (a/2)|.|_2^2 and entropy terms a * sum p log p; the
/// y-side enters with a minus sign so the penalty is concave there. The
/// induced moduli equal the coefficients: quadratic terms are a-strongly
/// convex in L2 and entropy is 1-strongly convex in L1 on the simplex.
class Regularizer {
 public:
  enum class Kind { kNone, kQuadraticQuadratic, kQuadraticEntropy, kEntropyEntropy };

  static Regularizer none();
  static Regularizer quadratic_quadratic(double alpha_x, double alpha_y,
                                         double bound_r);
  static Regularizer quadratic_entropy(double alpha_x, double alpha_y,
                                       double bound_r);
  static Regularizer entropy_entropy(double alpha_x, double alpha_y,
                                     double bound_r);

  Kind kind() const { return kind_; }
  double alpha_x() const { return alpha_x_; }
  double alpha_y() const { return alpha_y_; }
  double nu_x() const { return alpha_x_; }
  double nu_y() const { return alpha_y_; }
  double bound_r() const { return bound_r_; }

  bool entropy_in_x() const { return kind_ == Kind::kEntropyEntropy; }
  bool entropy_in_y() const {
    return kind_ == Kind::kQuadraticEntropy || kind_ == Kind::kEntropyEntropy;
  }

  double value(const Vector& x, const Vector& y) const;
  /// Gradient of the smooth (non-entropy) part only.
  Vector smooth_grad_x(const Vector& x) const;
  Vector smooth_grad_y(const Vector& y) const;

 private:
  Regularizer(Kind kind, double ax, double ay, double bound_r);

  Kind kind_ = Kind::kNone;
  double alpha_x_ = 0.0;
  double alpha_y_ = 0.0;
  double bound_r_ = 0.0;
};

/// The regularizer choice that balances stability against bias when the
/// objective is merely convex-concave under L2 geometry:
/// alpha_x = l_x^w / (sqrt(n) D_x), alpha_y = l_y^w / (sqrt(n) D_y),
/// R = (alpha_x/2) D_x^2 + (alpha_y/2) D_y^2.
Regularizer diameter_regularizer(const ProblemConstants& constants, int n);

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

/// Family-specific sufficient statistics of a sample set. All families are
/// affine in their datum, so the empirical mean objective equals the
/// objective evaluated at the mean statistics.
struct QuadraticAggregate {
  Vector a;
  Vector b;
};
struct GameAggregate {
  Matrix payoff;
};
struct MdpAggregate {
  std::vector<Matrix> transition;  // per action, numStates x numStates
  Matrix reward;                   // numStates x numActions
};
using EmpiricalAggregate =
    std::variant<QuadraticAggregate, GameAggregate, MdpAggregate>;

class EmpiricalObjective;

/// Structural view of a quadratic-family instance, enough to solve the
/// stationarity system in closed form.
struct QuadraticModel {
  double mu_x = 0.0;
  double mu_y = 0.0;
  const Matrix* coupling = nullptr;
};

/// A stochastic saddle-point problem instance: population objective,
/// seeded sampler, analytic gradients and known constants. Instances are
/// immutable after construction and safe to share across threads.
class StochasticSaddleProblem {
 public:
  virtual ~StochasticSaddleProblem() = default;

  virtual std::string family() const = 0;
  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;
  virtual const FeasibleSet& set_x() const = 0;
  virtual const FeasibleSet& set_y() const = 0;
  virtual NormTag norm_x() const = 0;
  virtual NormTag norm_y() const = 0;
  virtual const ProblemConstants& constants() const = 0;

  /// Instance constants re-measured under L2 norms on both blocks (used by
  /// the quadratic-regularizer rule). Identity for L2-native families.
  virtual ProblemConstants constants_l2() const { return constants(); }

  virtual SampleDatum sample(Rng& rng) const = 0;
  SampleSet draw_samples(std::uint64_t seed, int n) const;

  virtual double sample_value(const SampleDatum& datum, const Vector& x,
                              const Vector& y) const = 0;
  virtual Vector sample_grad_x(const SampleDatum& datum, const Vector& x,
                               const Vector& y) const = 0;
  virtual Vector sample_grad_y(const SampleDatum& datum, const Vector& x,
                               const Vector& y) const = 0;

  /// Exact per-sample Lipschitz values l_x(xi, y), l_y(xi, x) over the
  /// feasible sets, measured in the problem's norms. Throws for unbounded
  /// sets.
  virtual double sample_lipschitz_x(const SampleDatum& datum,
                                    const Vector& y) const = 0;
  virtual double sample_lipschitz_y(const SampleDatum& datum,
                                    const Vector& x) const = 0;

  /// Same values measured under L2 norms on both blocks (for quadratic
  /// regularizers on non-Euclidean problems). Defaults to the native values
  /// when the problem is already Euclidean, otherwise throws.
  virtual double sample_lipschitz_x_l2(const SampleDatum& datum,
                                       const Vector& y) const;
  virtual double sample_lipschitz_y_l2(const SampleDatum& datum,
                                       const Vector& x) const;

  virtual EmpiricalAggregate aggregate(const SampleSet& samples) const = 0;
  virtual EmpiricalAggregate population_aggregate() const = 0;

  virtual double aggregate_value(const EmpiricalAggregate& agg, const Vector& x,
                                 const Vector& y) const = 0;
  virtual Vector aggregate_grad_x(const EmpiricalAggregate& agg, const Vector& x,
                                  const Vector& y) const = 0;
  virtual Vector aggregate_grad_y(const EmpiricalAggregate& agg, const Vector& x,
                                  const Vector& y) const = 0;

  /// Exact best response of one block of aggregate objective + regularizer,
  /// when the family structure admits one.
  virtual std::optional<BestResponse> aggregate_best_response(
      const EmpiricalAggregate& agg, const Regularizer& reg, Side side,
      const Vector& fixed) const = 0;

  double population_value(const Vector& x, const Vector& y) const;
  Vector population_grad_x(const Vector& x, const Vector& y) const;
  Vector population_grad_y(const Vector& x, const Vector& y) const;

  virtual bool has_population_saddle() const { return false; }
  /// (x*, y*) of the population problem; throws when not available.
  virtual std::pair<Vector, Vector> population_saddle_point() const;

  /// Non-null for the quadratic family.
  virtual std::optional<QuadraticModel> quadratic_model() const {
    return std::nullopt;
  }
};

using ProblemPtr = std::shared_ptr<const StochasticSaddleProblem>;

// ---------------------------------------------------------------------------
// Family constructors
// ---------------------------------------------------------------------------

/// Parameters for the quadratic SC-SC testbed
///   Phi_xi(x,y) = (mu_x/2)|x|^2 - a_xi'x - (mu_y/2)|y|^2 + b_xi'y + x'Cy
/// with a_xi = a_bar + noise, b_xi = b_bar + noise, noise uniform on the
/// centered box [-noise_scale, noise_scale]^d (so boundedness assumptions
/// hold exactly). box_radius_* = 0 leaves that block unconstrained.
/// noise_scale_b < 0 reuses noise_scale for the b block.
struct QuadraticSpec {
  Vector a_bar;
  Vector b_bar;
  Matrix coupling;
  double mu_x = 1.0;
  double mu_y = 1.0;
  double noise_scale = 0.0;
  double noise_scale_b = -1.0;
  double box_radius_x = 0.0;
  double box_radius_y = 0.0;
};

/// Builds the quadratic instance; the population saddle is solved in closed
/// form. When boxes are given they must contain the population saddle
/// strictly (throws otherwise), so constrained and unconstrained population
/// solutions coincide.
ProblemPtr make_quadratic_scsc(const QuadraticSpec& spec);

/// Random well-conditioned quadratic instance for sweeps and fuzz tests.
QuadraticSpec random_quadratic_spec(int dim_x, int dim_y, double mu_x, double mu_y,
                                    double noise_scale, double box_radius_x,
                                    double box_radius_y, Rng& rng);

/// Two-player stochastic matrix game over simplices, L1 norms. Sampled
/// payoffs are a_bar plus independent uniform noise with per-entry amplitude
/// min(noise_scale, 1 - |a_bar_ij|), which keeps |A_xi| <= 1 almost surely
/// and the mean exactly a_bar.
ProblemPtr make_bilinear_game(const Matrix& payoff_mean, double noise_scale);

/// Random game instance with mean entries uniform in [-0.9, 0.9].
ProblemPtr make_random_bilinear_game(int n1, int n2, double noise_scale,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Empirical objective
// ---------------------------------------------------------------------------

/// The sample-average objective plus an optional regularizer; the object a
/// solver minimizes/maximizes. Evaluation goes through the family's mean
/// sufficient statistics, which for these (affine-in-data) families equals
/// the arithmetic mean of the per-sample objectives.
class EmpiricalObjective final : public SaddleFunction {
 public:
  EmpiricalObjective(ProblemPtr problem, SampleSet samples, Regularizer reg);

  const FeasibleSet& set_x() const override { return problem_->set_x(); }
  const FeasibleSet& set_y() const override { return problem_->set_y(); }
  double value(const Vector& x, const Vector& y) const override;
  Vector grad_x(const Vector& x, const Vector& y) const override;
  Vector grad_y(const Vector& x, const Vector& y) const override;
  CompositeEntropy composite() const override;
  std::optional<BestResponse> exact_best_response(Side side,
                                                  const Vector& fixed) const override;

  /// The empirical mean objective without the regularizer.
  double base_value(const Vector& x, const Vector& y) const;

  const StochasticSaddleProblem& problem() const { return *problem_; }
  ProblemPtr problem_ptr() const { return problem_; }
  const SampleSet& samples() const { return samples_; }
  const Regularizer& regularizer() const { return reg_; }
  const EmpiricalAggregate& aggregate() const { return aggregate_; }

 private:
  ProblemPtr problem_;
  SampleSet samples_;
  Regularizer reg_;
  EmpiricalAggregate aggregate_;
};

/// The population objective of a problem viewed as a SaddleFunction
/// (no regularizer).
class PopulationObjective final : public SaddleFunction {
 public:
  explicit PopulationObjective(ProblemPtr problem)
      : problem_(std::move(problem)), aggregate_(problem_->population_aggregate()) {}

  const FeasibleSet& set_x() const override { return problem_->set_x(); }
  const FeasibleSet& set_y() const override { return problem_->set_y(); }
  double value(const Vector& x, const Vector& y) const override {
    return problem_->aggregate_value(aggregate_, x, y);
  }
  Vector grad_x(const Vector& x, const Vector& y) const override {
    return problem_->aggregate_grad_x(aggregate_, x, y);
  }
  Vector grad_y(const Vector& x, const Vector& y) const override {
    return problem_->aggregate_grad_y(aggregate_, x, y);
  }
  std::optional<BestResponse> exact_best_response(Side side,
                                                  const Vector& fixed) const override {
    return problem_->aggregate_best_response(aggregate_, Regularizer::none(), side,
                                             fixed);
  }

 private:
  ProblemPtr problem_;
  EmpiricalAggregate aggregate_;
};

inline EmpiricalObjective empirical_objective(ProblemPtr problem, SampleSet samples,
                                              Regularizer reg) {
  return EmpiricalObjective(std::move(problem), std::move(samples), std::move(reg));
}

}  // namespace esp

#endif  // ESPKIT_PROBLEMS_HPP
