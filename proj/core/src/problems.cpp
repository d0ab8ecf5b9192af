// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/problems.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace esp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double neg_entropy(const Vector& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) s += plogp(p[i]);
  return s;
}

Vector softmax(const Vector& w) {
  Vector out = (w.array() - w.maxCoeff()).exp();
  out /= out.sum();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SampleSet / constants / regularizer
// ---------------------------------------------------------------------------

SampleSet leave_one_out_swap(const SampleSet& samples, int i,
                             SampleDatum replacement) {
  require(i >= 0 && i < samples.n(), "leave_one_out_swap: index out of range");
  SampleSet out = samples;
  out.data[static_cast<std::size_t>(i)] = std::move(replacement);
  return out;
}

double ProblemConstants::condition_number() const {
  const double mu = std::min(mu_x, mu_y);
  require(mu > 0.0, "condition_number: requires positive moduli");
  return std::max({grad_lip_x, grad_lip_y, grad_lip_xy}) / mu;
}

Regularizer::Regularizer(Kind kind, double ax, double ay, double bound_r)
    : kind_(kind), alpha_x_(ax), alpha_y_(ay), bound_r_(bound_r) {
  require(ax >= 0.0 && ay >= 0.0, "Regularizer: coefficients must be >= 0");
  require(std::isfinite(bound_r) && bound_r >= 0.0,
          "Regularizer: bound R must be finite and >= 0");
}

Regularizer Regularizer::none() { return Regularizer(Kind::kNone, 0.0, 0.0, 0.0); }
Regularizer Regularizer::quadratic_quadratic(double ax, double ay, double bound_r) {
  return Regularizer(Kind::kQuadraticQuadratic, ax, ay, bound_r);
}
Regularizer Regularizer::quadratic_entropy(double ax, double ay, double bound_r) {
  return Regularizer(Kind::kQuadraticEntropy, ax, ay, bound_r);
}
Regularizer Regularizer::entropy_entropy(double ax, double ay, double bound_r) {
  return Regularizer(Kind::kEntropyEntropy, ax, ay, bound_r);
}

double Regularizer::value(const Vector& x, const Vector& y) const {
  switch (kind_) {
    case Kind::kNone:
      return 0.0;
    case Kind::kQuadraticQuadratic:
      return 0.5 * alpha_x_ * x.squaredNorm() - 0.5 * alpha_y_ * y.squaredNorm();
    case Kind::kQuadraticEntropy:
      return 0.5 * alpha_x_ * x.squaredNorm() - alpha_y_ * neg_entropy(y);
    case Kind::kEntropyEntropy:
      return alpha_x_ * neg_entropy(x) - alpha_y_ * neg_entropy(y);
  }
  return 0.0;
}

Vector Regularizer::smooth_grad_x(const Vector& x) const {
  if (kind_ == Kind::kQuadraticQuadratic || kind_ == Kind::kQuadraticEntropy)
    return alpha_x_ * x;
  return Vector::Zero(x.size());
}

Vector Regularizer::smooth_grad_y(const Vector& y) const {
  if (kind_ == Kind::kQuadraticQuadratic) return -alpha_y_ * y;
  return Vector::Zero(y.size());
}

Regularizer diameter_regularizer(const ProblemConstants& constants, int n) {
  require(n >= 1, "diameter_regularizer: n must be >= 1");
  require(std::isfinite(constants.diam_x) && constants.diam_x > 0.0 &&
              std::isfinite(constants.diam_y) && constants.diam_y > 0.0,
          "diameter_regularizer: requires positive finite diameters");
  require(std::isfinite(constants.lip_x_weak) && std::isfinite(constants.lip_y_weak),
          "diameter_regularizer: requires finite weak Lipschitz constants");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double ax = constants.lip_x_weak / (sqrt_n * constants.diam_x);
  const double ay = constants.lip_y_weak / (sqrt_n * constants.diam_y);
  const double bound_r = 0.5 * ax * constants.diam_x * constants.diam_x +
                         0.5 * ay * constants.diam_y * constants.diam_y;
  return Regularizer::quadratic_quadratic(ax, ay, bound_r);
}

// ---------------------------------------------------------------------------
// StochasticSaddleProblem base
// ---------------------------------------------------------------------------

SampleSet StochasticSaddleProblem::draw_samples(std::uint64_t seed, int n) const {
  require(n >= 1, "draw_samples: n must be >= 1");
  SampleSet out;
  out.seed = seed;
  out.data.reserve(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) out.data.push_back(sample(rng));
  return out;
}

double StochasticSaddleProblem::population_value(const Vector& x,
                                                 const Vector& y) const {
  return aggregate_value(population_aggregate(), x, y);
}
Vector StochasticSaddleProblem::population_grad_x(const Vector& x,
                                                  const Vector& y) const {
  return aggregate_grad_x(population_aggregate(), x, y);
}
Vector StochasticSaddleProblem::population_grad_y(const Vector& x,
                                                  const Vector& y) const {
  return aggregate_grad_y(population_aggregate(), x, y);
}

std::pair<Vector, Vector> StochasticSaddleProblem::population_saddle_point() const {
  throw std::domain_error("population_saddle_point: not available for family " +
                          family());
}

double StochasticSaddleProblem::sample_lipschitz_x_l2(const SampleDatum& datum,
                                                      const Vector& y) const {
  if (norm_x() != NormTag::kEuclideanL2)
    throw std::domain_error("sample_lipschitz_x_l2: no L2 values for family " +
                            family());
  return sample_lipschitz_x(datum, y);
}

double StochasticSaddleProblem::sample_lipschitz_y_l2(const SampleDatum& datum,
                                                      const Vector& x) const {
  if (norm_y() != NormTag::kEuclideanL2)
    throw std::domain_error("sample_lipschitz_y_l2: no L2 values for family " +
                            family());
  return sample_lipschitz_y(datum, x);
}

// ---------------------------------------------------------------------------
// Quadratic SC-SC family
// ---------------------------------------------------------------------------

namespace {

class QuadraticProblem final : public StochasticSaddleProblem {
 public:
  explicit QuadraticProblem(QuadraticSpec spec)
      : spec_(std::move(spec)),
        dim_x_(static_cast<int>(spec_.a_bar.size())),
        dim_y_(static_cast<int>(spec_.b_bar.size())),
        set_x_(spec_.box_radius_x > 0.0
                   ? FeasibleSet::linf_box(dim_x_, spec_.box_radius_x)
                   : FeasibleSet::unbounded(dim_x_)),
        set_y_(spec_.box_radius_y > 0.0
                   ? FeasibleSet::linf_box(dim_y_, spec_.box_radius_y)
                   : FeasibleSet::unbounded(dim_y_)) {
    require(spec_.mu_x > 0.0 && spec_.mu_y > 0.0,
            "make_quadratic_scsc: moduli must be positive");
    require(dim_x_ >= 1 && dim_y_ >= 1, "make_quadratic_scsc: empty dimensions");
    require(spec_.coupling.rows() == dim_x_ && spec_.coupling.cols() == dim_y_,
            "make_quadratic_scsc: coupling must be dimX x dimY");
    require(spec_.noise_scale >= 0.0, "make_quadratic_scsc: negative noise scale");
    if (spec_.noise_scale_b < 0.0) spec_.noise_scale_b = spec_.noise_scale;

    solve_population_saddle();
    fill_constants();
  }

  std::string family() const override { return "quadratic"; }
  int dim_x() const override { return dim_x_; }
  int dim_y() const override { return dim_y_; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  NormTag norm_x() const override { return NormTag::kEuclideanL2; }
  NormTag norm_y() const override { return NormTag::kEuclideanL2; }
  const ProblemConstants& constants() const override { return constants_; }

  SampleDatum sample(Rng& rng) const override {
    QuadraticDatum d;
    d.a = spec_.a_bar;
    d.b = spec_.b_bar;
    for (Eigen::Index i = 0; i < d.a.size(); ++i)
      d.a[i] += spec_.noise_scale * rng.uniform(-1.0, 1.0);
    for (Eigen::Index j = 0; j < d.b.size(); ++j)
      d.b[j] += spec_.noise_scale_b * rng.uniform(-1.0, 1.0);
    return d;
  }

  double sample_value(const SampleDatum& datum, const Vector& x,
                      const Vector& y) const override {
    const auto& d = std::get<QuadraticDatum>(datum);
    return value_with(d.a, d.b, x, y);
  }
  Vector sample_grad_x(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override {
    const auto& d = std::get<QuadraticDatum>(datum);
    return spec_.mu_x * x - d.a + spec_.coupling * y;
  }
  Vector sample_grad_y(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override {
    const auto& d = std::get<QuadraticDatum>(datum);
    return -spec_.mu_y * y + d.b + spec_.coupling.transpose() * x;
  }

  double sample_lipschitz_x(const SampleDatum& datum, const Vector& y) const override {
    require(set_x_.bounded(), "sample_lipschitz_x: unbounded x block");
    const auto& d = std::get<QuadraticDatum>(datum);
    // sup over the box of |mu_x x + (Cy - a)|_2, separable per coordinate.
    const Vector c = spec_.coupling * y - d.a;
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double t = spec_.mu_x * spec_.box_radius_x + std::abs(c[i]);
      s += t * t;
    }
    return std::sqrt(s);
  }
  double sample_lipschitz_y(const SampleDatum& datum, const Vector& x) const override {
    require(set_y_.bounded(), "sample_lipschitz_y: unbounded y block");
    const auto& d = std::get<QuadraticDatum>(datum);
    const Vector c = d.b + spec_.coupling.transpose() * x;
    double s = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      const double t = spec_.mu_y * spec_.box_radius_y + std::abs(c[j]);
      s += t * t;
    }
    return std::sqrt(s);
  }

  EmpiricalAggregate aggregate(const SampleSet& samples) const override {
    require(samples.n() >= 1, "aggregate: empty sample set");
    QuadraticAggregate agg{Vector::Zero(dim_x_), Vector::Zero(dim_y_)};
    for (const auto& datum : samples.data) {
      const auto& d = std::get<QuadraticDatum>(datum);
      agg.a += d.a;
      agg.b += d.b;
    }
    agg.a /= samples.n();
    agg.b /= samples.n();
    return agg;
  }

  EmpiricalAggregate population_aggregate() const override {
    return QuadraticAggregate{spec_.a_bar, spec_.b_bar};
  }

  double aggregate_value(const EmpiricalAggregate& agg, const Vector& x,
                         const Vector& y) const override {
    const auto& q = std::get<QuadraticAggregate>(agg);
    return value_with(q.a, q.b, x, y);
  }
  Vector aggregate_grad_x(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override {
    const auto& q = std::get<QuadraticAggregate>(agg);
    (void)x;
    return spec_.mu_x * x - q.a + spec_.coupling * y;
  }
  Vector aggregate_grad_y(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override {
    const auto& q = std::get<QuadraticAggregate>(agg);
    return -spec_.mu_y * y + q.b + spec_.coupling.transpose() * x;
  }

  std::optional<BestResponse> aggregate_best_response(
      const EmpiricalAggregate& agg, const Regularizer& reg, Side side,
      const Vector& fixed) const override {
    if (reg.kind() != Regularizer::Kind::kNone &&
        reg.kind() != Regularizer::Kind::kQuadraticQuadratic)
      return std::nullopt;  // entropy regularizers need simplex blocks
    const auto& q = std::get<QuadraticAggregate>(agg);
    BestResponse br;
    if (side == Side::kMinimizeX) {
      Vector x = (q.a - spec_.coupling * fixed) / (spec_.mu_x + reg.alpha_x());
      if (set_x_.bounded())
        x = x.cwiseMax(-spec_.box_radius_x).cwiseMin(spec_.box_radius_x);
      br.value = value_with(q.a, q.b, x, fixed) + reg.value(x, fixed);
      br.point = std::move(x);
    } else {
      Vector y =
          (q.b + spec_.coupling.transpose() * fixed) / (spec_.mu_y + reg.alpha_y());
      if (set_y_.bounded())
        y = y.cwiseMax(-spec_.box_radius_y).cwiseMin(spec_.box_radius_y);
      br.value = value_with(q.a, q.b, fixed, y) + reg.value(fixed, y);
      br.point = std::move(y);
    }
    return br;
  }

  bool has_population_saddle() const override { return true; }
  std::pair<Vector, Vector> population_saddle_point() const override {
    return {x_star_, y_star_};
  }

  std::optional<QuadraticModel> quadratic_model() const override {
    return QuadraticModel{spec_.mu_x, spec_.mu_y, &spec_.coupling};
  }

 private:
  double value_with(const Vector& a, const Vector& b, const Vector& x,
                    const Vector& y) const {
    return 0.5 * spec_.mu_x * x.squaredNorm() - a.dot(x) -
           0.5 * spec_.mu_y * y.squaredNorm() + b.dot(y) +
           x.dot(spec_.coupling * y);
  }

  void solve_population_saddle() {
    const Matrix& c = spec_.coupling;
    Matrix lhs = spec_.mu_x * Matrix::Identity(dim_x_, dim_x_) +
                 c * c.transpose() / spec_.mu_y;
    Vector rhs = spec_.a_bar - c * spec_.b_bar / spec_.mu_y;
    x_star_ = lhs.ldlt().solve(rhs);
    y_star_ = (spec_.b_bar + c.transpose() * x_star_) / spec_.mu_y;
    if (set_x_.bounded())
      require(x_star_.lpNorm<Eigen::Infinity>() < spec_.box_radius_x - 1e-9,
              "make_quadratic_scsc: population saddle touches the x box; "
              "enlarge box_radius_x");
    if (set_y_.bounded())
      require(y_star_.lpNorm<Eigen::Infinity>() < spec_.box_radius_y - 1e-9,
              "make_quadratic_scsc: population saddle touches the y box; "
              "enlarge box_radius_y");
  }

  void fill_constants() {
    ProblemConstants c;
    c.mu_x = spec_.mu_x;
    c.mu_y = spec_.mu_y;
    c.grad_lip_x = spec_.mu_x;
    c.grad_lip_y = spec_.mu_y;
    const double sigma_c =
        spec_.coupling.size() == 0
            ? 0.0
            : spec_.coupling.jacobiSvd().singularValues().maxCoeff();
    c.grad_lip_xy = sigma_c;
    // E|grad Phi_xi(x*,y*)|^2: at the saddle the gradient reduces to the
    // centered noise, uniform on a box, with E[u^2] = scale^2/3 per coordinate.
    c.grad_x_second_moment_opt = spec_.noise_scale * spec_.noise_scale * dim_x_ / 3.0;
    c.grad_y_second_moment_opt =
        spec_.noise_scale_b * spec_.noise_scale_b * dim_y_ / 3.0;
    c.grad_second_moment_opt =
        c.grad_x_second_moment_opt + c.grad_y_second_moment_opt;
    if (set_x_.bounded() && set_y_.bounded()) {
      const double rx = spec_.box_radius_x * std::sqrt(double(dim_x_));
      const double ry = spec_.box_radius_y * std::sqrt(double(dim_y_));
      const double a_sup = spec_.a_bar.norm() +
                           spec_.noise_scale * std::sqrt(double(dim_x_));
      const double b_sup = spec_.b_bar.norm() +
                           spec_.noise_scale_b * std::sqrt(double(dim_y_));
      // Almost-sure envelopes of the gradient dual norms over the boxes;
      // used for both weak and strong constants (sup E <= E sup <= envelope).
      c.lip_x_strong = spec_.mu_x * rx + a_sup + sigma_c * ry;
      c.lip_y_strong = spec_.mu_y * ry + b_sup + sigma_c * rx;
      c.lip_x_weak = c.lip_x_strong;
      c.lip_y_weak = c.lip_y_strong;
      c.diam_x = set_x_.diameter(NormTag::kEuclideanL2);
      c.diam_y = set_y_.diameter(NormTag::kEuclideanL2);
    } else {
      c.lip_x_weak = c.lip_x_strong = kInf;
      c.lip_y_weak = c.lip_y_strong = kInf;
      c.diam_x = c.diam_y = kInf;
    }
    c.lipschitz_estimated = false;
    constants_ = c;
  }

  QuadraticSpec spec_;
  int dim_x_;
  int dim_y_;
  FeasibleSet set_x_;
  FeasibleSet set_y_;
  ProblemConstants constants_;
  Vector x_star_;
  Vector y_star_;
};

}  // namespace

ProblemPtr make_quadratic_scsc(const QuadraticSpec& spec) {
  return std::make_shared<QuadraticProblem>(spec);
}

QuadraticSpec random_quadratic_spec(int dim_x, int dim_y, double mu_x, double mu_y,
                                    double noise_scale, double box_radius_x,
                                    double box_radius_y, Rng& rng) {
  QuadraticSpec spec;
  spec.mu_x = mu_x;
  spec.mu_y = mu_y;
  spec.noise_scale = noise_scale;
  spec.box_radius_x = box_radius_x;
  spec.box_radius_y = box_radius_y;
  spec.a_bar = Vector::NullaryExpr(dim_x, [&](Eigen::Index) { return rng.uniform(-1.0, 1.0); });
  spec.b_bar = Vector::NullaryExpr(dim_y, [&](Eigen::Index) { return rng.uniform(-1.0, 1.0); });
  Matrix c = Matrix::NullaryExpr(
      dim_x, dim_y, [&](Eigen::Index, Eigen::Index) { return rng.uniform(-1.0, 1.0); });
  const double sigma = c.jacobiSvd().singularValues().maxCoeff();
  if (sigma > 0.0) c *= 0.5 * std::sqrt(mu_x * mu_y) / sigma;
  spec.coupling = std::move(c);
  return spec;
}

// ---------------------------------------------------------------------------
// Bilinear stochastic matrix game family
// ---------------------------------------------------------------------------

namespace {

class BilinearGameProblem final : public StochasticSaddleProblem {
 public:
  BilinearGameProblem(Matrix payoff_mean, double noise_scale)
      : payoff_mean_(std::move(payoff_mean)),
        noise_scale_(noise_scale),
        n1_(static_cast<int>(payoff_mean_.rows())),
        n2_(static_cast<int>(payoff_mean_.cols())),
        set_x_(FeasibleSet::simplex(n1_)),
        set_y_(FeasibleSet::simplex(n2_)) {
    require(n1_ >= 2 && n2_ >= 2, "make_bilinear_game: needs N1, N2 >= 2");
    require(noise_scale_ >= 0.0, "make_bilinear_game: negative noise scale");
    require(payoff_mean_.cwiseAbs().maxCoeff() <= 1.0 + 1e-12,
            "make_bilinear_game: payoff law exceeds the almost-sure bound "
            "|entry| <= 1");
    // Per-entry noise amplitude keeping |A_xi| <= 1 a.s. and the mean exact.
    noise_amp_ = (Matrix::Constant(n1_, n2_, 1.0) - payoff_mean_.cwiseAbs())
                     .cwiseMin(noise_scale_)
                     .cwiseMax(0.0);
    fill_constants();
  }

  std::string family() const override { return "game"; }
  int dim_x() const override { return n1_; }
  int dim_y() const override { return n2_; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  NormTag norm_x() const override { return NormTag::kSumL1; }
  NormTag norm_y() const override { return NormTag::kSumL1; }
  const ProblemConstants& constants() const override { return constants_; }

  ProblemConstants constants_l2() const override {
    ProblemConstants c = constants_;
    double weak_x = 0.0, strong_x = 0.0;  // max over columns for l_x
    for (int j = 0; j < n2_; ++j) {
      double w = 0.0, s = 0.0;
      for (int i = 0; i < n1_; ++i) {
        const double mean = payoff_mean_(i, j);
        const double amp = noise_amp_(i, j);
        w += mean * mean + amp * amp / 3.0;
        const double sup = std::abs(mean) + amp;
        s += sup * sup;
      }
      weak_x = std::max(weak_x, w);
      strong_x = std::max(strong_x, s);
    }
    double weak_y = 0.0, strong_y = 0.0;  // max over rows for l_y
    for (int i = 0; i < n1_; ++i) {
      double w = 0.0, s = 0.0;
      for (int j = 0; j < n2_; ++j) {
        const double mean = payoff_mean_(i, j);
        const double amp = noise_amp_(i, j);
        w += mean * mean + amp * amp / 3.0;
        const double sup = std::abs(mean) + amp;
        s += sup * sup;
      }
      weak_y = std::max(weak_y, w);
      strong_y = std::max(strong_y, s);
    }
    c.lip_x_weak = std::sqrt(weak_x);
    c.lip_x_strong = std::sqrt(strong_x);
    c.lip_y_weak = std::sqrt(weak_y);
    c.lip_y_strong = std::sqrt(strong_y);
    c.grad_lip_xy = payoff_mean_.jacobiSvd().singularValues().maxCoeff();
    c.diam_x = set_x_.diameter(NormTag::kEuclideanL2);
    c.diam_y = set_y_.diameter(NormTag::kEuclideanL2);
    return c;
  }

  SampleDatum sample(Rng& rng) const override {
    GameDatum d;
    d.payoff = payoff_mean_;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j)
        d.payoff(i, j) += noise_amp_(i, j) * rng.uniform(-1.0, 1.0);
    return d;
  }

  double sample_value(const SampleDatum& datum, const Vector& x,
                      const Vector& y) const override {
    return x.dot(std::get<GameDatum>(datum).payoff * y);
  }
  Vector sample_grad_x(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override {
    (void)x;
    return std::get<GameDatum>(datum).payoff * y;
  }
  Vector sample_grad_y(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override {
    (void)y;
    return std::get<GameDatum>(datum).payoff.transpose() * x;
  }

  double sample_lipschitz_x(const SampleDatum& datum, const Vector& y) const override {
    return (std::get<GameDatum>(datum).payoff * y).lpNorm<Eigen::Infinity>();
  }
  double sample_lipschitz_y(const SampleDatum& datum, const Vector& x) const override {
    return (std::get<GameDatum>(datum).payoff.transpose() * x)
        .lpNorm<Eigen::Infinity>();
  }

  // The bilinear gradients are constant in the own block, so the L2 values
  // are plain gradient norms.
  double sample_lipschitz_x_l2(const SampleDatum& datum,
                               const Vector& y) const override {
    return (std::get<GameDatum>(datum).payoff * y).norm();
  }
  double sample_lipschitz_y_l2(const SampleDatum& datum,
                               const Vector& x) const override {
    return (std::get<GameDatum>(datum).payoff.transpose() * x).norm();
  }

  EmpiricalAggregate aggregate(const SampleSet& samples) const override {
    require(samples.n() >= 1, "aggregate: empty sample set");
    GameAggregate agg{Matrix::Zero(n1_, n2_)};
    for (const auto& datum : samples.data)
      agg.payoff += std::get<GameDatum>(datum).payoff;
    agg.payoff /= samples.n();
    return agg;
  }

  EmpiricalAggregate population_aggregate() const override {
    return GameAggregate{payoff_mean_};
  }

  double aggregate_value(const EmpiricalAggregate& agg, const Vector& x,
                         const Vector& y) const override {
    return x.dot(std::get<GameAggregate>(agg).payoff * y);
  }
  Vector aggregate_grad_x(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override {
    (void)x;
    return std::get<GameAggregate>(agg).payoff * y;
  }
  Vector aggregate_grad_y(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override {
    (void)y;
    return std::get<GameAggregate>(agg).payoff.transpose() * x;
  }

  std::optional<BestResponse> aggregate_best_response(
      const EmpiricalAggregate& agg, const Regularizer& reg, Side side,
      const Vector& fixed) const override {
    const Matrix& a = std::get<GameAggregate>(agg).payoff;
    BestResponse br;
    if (side == Side::kMaximizeY) {
      const Vector c = a.transpose() * fixed;  // maximize <c, y> + penalty
      Vector y;
      switch (reg.kind()) {
        case Regularizer::Kind::kNone: {
          Eigen::Index j = 0;
          c.maxCoeff(&j);
          y = Vector::Zero(n2_);
          y[j] = 1.0;
          break;
        }
        case Regularizer::Kind::kQuadraticEntropy:
        case Regularizer::Kind::kEntropyEntropy:
          y = softmax(c / reg.alpha_y());
          break;
        case Regularizer::Kind::kQuadraticQuadratic:
          y = project_simplex(c / reg.alpha_y());
          break;
      }
      br.value = fixed.dot(a * y) + reg.value(fixed, y);
      br.point = std::move(y);
    } else {
      const Vector c = a * fixed;  // minimize <c, x> + penalty
      Vector x;
      switch (reg.kind()) {
        case Regularizer::Kind::kNone: {
          Eigen::Index i = 0;
          c.minCoeff(&i);
          x = Vector::Zero(n1_);
          x[i] = 1.0;
          break;
        }
        case Regularizer::Kind::kEntropyEntropy:
          x = softmax(-c / reg.alpha_x());
          break;
        case Regularizer::Kind::kQuadraticQuadratic:
        case Regularizer::Kind::kQuadraticEntropy:
          x = project_simplex(-c / reg.alpha_x());
          break;
      }
      br.value = x.dot(a * fixed) + reg.value(x, fixed);
      br.point = std::move(x);
    }
    return br;
  }

 private:
  void fill_constants() {
    ProblemConstants c;
    // Section-4 constants under the L1/L1 geometry: the gradient dual norms
    // are bounded by the almost-sure payoff bound 1.
    c.lip_x_weak = c.lip_x_strong = 1.0;
    c.lip_y_weak = c.lip_y_strong = 1.0;
    c.grad_lip_x = 0.0;
    c.grad_lip_y = 0.0;
    c.grad_lip_xy = payoff_mean_.cwiseAbs().maxCoeff();
    c.diam_x = set_x_.diameter(NormTag::kSumL1);
    c.diam_y = set_y_.diameter(NormTag::kSumL1);
    c.lipschitz_estimated = false;
    constants_ = c;
  }

  Matrix payoff_mean_;
  double noise_scale_;
  Matrix noise_amp_;
  int n1_;
  int n2_;
  FeasibleSet set_x_;
  FeasibleSet set_y_;
  ProblemConstants constants_;
};

}  // namespace

ProblemPtr make_bilinear_game(const Matrix& payoff_mean, double noise_scale) {
  return std::make_shared<BilinearGameProblem>(payoff_mean, noise_scale);
}

ProblemPtr make_random_bilinear_game(int n1, int n2, double noise_scale,
                                     std::uint64_t seed) {
  require(n1 >= 2 && n2 >= 2, "make_random_bilinear_game: needs N1, N2 >= 2");
  Rng rng(seed);
  Matrix mean = Matrix::NullaryExpr(n1, n2, [&](Eigen::Index, Eigen::Index) {
    return rng.uniform(-0.9, 0.9);
  });
  return make_bilinear_game(mean, noise_scale);
}

// ---------------------------------------------------------------------------
// EmpiricalObjective
// ---------------------------------------------------------------------------

EmpiricalObjective::EmpiricalObjective(ProblemPtr problem, SampleSet samples,
                                       Regularizer reg)
    : problem_(std::move(problem)),
      samples_(std::move(samples)),
      reg_(std::move(reg)),
      aggregate_(problem_->aggregate(samples_)) {
  require(samples_.n() >= 1, "empirical_objective: empty sample set");
  if (reg_.entropy_in_x())
    require(problem_->set_x().simplex_like(),
            "empirical_objective: entropy regularizer in x needs a simplex block");
  if (reg_.entropy_in_y())
    require(problem_->set_y().simplex_like(),
            "empirical_objective: entropy regularizer in y needs a simplex block");
}

double EmpiricalObjective::value(const Vector& x, const Vector& y) const {
  return problem_->aggregate_value(aggregate_, x, y) + reg_.value(x, y);
}

double EmpiricalObjective::base_value(const Vector& x, const Vector& y) const {
  return problem_->aggregate_value(aggregate_, x, y);
}

Vector EmpiricalObjective::grad_x(const Vector& x, const Vector& y) const {
  return problem_->aggregate_grad_x(aggregate_, x, y) + reg_.smooth_grad_x(x);
}

Vector EmpiricalObjective::grad_y(const Vector& x, const Vector& y) const {
  return problem_->aggregate_grad_y(aggregate_, x, y) + reg_.smooth_grad_y(y);
}

CompositeEntropy EmpiricalObjective::composite() const {
  CompositeEntropy c;
  if (reg_.entropy_in_x()) c.coef_x = reg_.alpha_x();
  if (reg_.entropy_in_y()) c.coef_y = reg_.alpha_y();
  return c;
}

std::optional<BestResponse> EmpiricalObjective::exact_best_response(
    Side side, const Vector& fixed) const {
  return problem_->aggregate_best_response(aggregate_, reg_, side, fixed);
}

}  // namespace esp
