// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace esp {

namespace {

constexpr double kLogFloor = 1e-300;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

NormTag dual_norm(NormTag tag) {
  switch (tag) {
    case NormTag::kEuclideanL2: return NormTag::kEuclideanL2;
    case NormTag::kSumL1: return NormTag::kMaxLinf;
    case NormTag::kMaxLinf: return NormTag::kSumL1;
  }
  throw std::invalid_argument("dual_norm: unknown tag");
}

double norm_value(NormTag tag, const Vector& v) {
  switch (tag) {
    case NormTag::kEuclideanL2: return v.norm();
    case NormTag::kSumL1: return v.lpNorm<1>();
    case NormTag::kMaxLinf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  throw std::invalid_argument("norm_value: unknown tag");
}

Vector dual_pairing_maximizer(NormTag tag, const Vector& v) {
  Vector u = Vector::Zero(v.size());
  switch (tag) {
    case NormTag::kEuclideanL2: {
      const double n = v.norm();
      if (n == 0.0) {
        if (u.size() > 0) u[0] = 1.0;
      } else {
        u = v / n;
      }
      return u;
    }
    case NormTag::kSumL1: {
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      u[imax] = v[imax] >= 0.0 ? 1.0 : -1.0;
      return u;
    }
    case NormTag::kMaxLinf: {
      for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = v[i] >= 0.0 ? 1.0 : -1.0;
      return u;
    }
  }
  throw std::invalid_argument("dual_pairing_maximizer: unknown tag");
}

std::string to_string(NormTag tag) {
  switch (tag) {
    case NormTag::kEuclideanL2: return "l2";
    case NormTag::kSumL1: return "l1";
    case NormTag::kMaxLinf: return "linf";
  }
  return "?";
}

FeasibleSet FeasibleSet::linf_box(int dim, double radius) {
  require(dim >= 1, "linf_box: dim must be positive");
  require(radius > 0.0, "linf_box: radius must be positive");
  FeasibleSet s;
  s.kind_ = Kind::kLinfBox;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::simplex(int dim) {
  require(dim >= 1, "simplex: dim must be positive");
  FeasibleSet s;
  s.kind_ = Kind::kSimplex;
  s.dim_ = dim;
  return s;
}

FeasibleSet FeasibleSet::occupancy(int num_states, int num_actions,
                                   double marginal_low, double marginal_high) {
  require(num_states >= 1 && num_actions >= 1,
          "occupancy: state/action counts must be positive");
  require(marginal_low > 0.0 && marginal_low <= 1.0 / num_states &&
              1.0 / num_states <= marginal_high,
          "occupancy: requires 0 < low <= 1/numStates <= high");
  FeasibleSet s;
  s.kind_ = Kind::kOccupancy;
  s.dim_ = num_states * num_actions;
  s.num_states_ = num_states;
  s.num_actions_ = num_actions;
  s.marginal_low_ = marginal_low;
  s.marginal_high_ = marginal_high;
  return s;
}

FeasibleSet FeasibleSet::unbounded(int dim) {
  require(dim >= 1, "unbounded: dim must be positive");
  FeasibleSet s;
  s.kind_ = Kind::kUnbounded;
  s.dim_ = dim;
  return s;
}

bool FeasibleSet::contains(const Vector& p, double tol) const {
  if (p.size() != dim_) return false;
  switch (kind_) {
    case Kind::kUnbounded:
      return true;
    case Kind::kLinfBox:
      return p.lpNorm<Eigen::Infinity>() <= radius_ + tol;
    case Kind::kSimplex:
      return p.minCoeff() >= -tol && std::abs(p.sum() - 1.0) <= tol;
    case Kind::kOccupancy: {
      if (p.minCoeff() < -tol || std::abs(p.sum() - 1.0) > tol) return false;
      for (int s = 0; s < num_states_; ++s) {
        double marginal = 0.0;
        for (int a = 0; a < num_actions_; ++a) marginal += p[a * num_states_ + s];
        if (marginal < marginal_low_ - tol || marginal > marginal_high_ + tol)
          return false;
      }
      return true;
    }
  }
  return false;
}

Vector project_simplex(const Vector& p) {
  const Eigen::Index n = p.size();
  require(n >= 1, "project_simplex: empty vector");
  std::vector<double> u(p.data(), p.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double candidate = (1.0 - cumsum) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] + candidate > 0.0) {
      rho = static_cast<int>(j + 1);
      theta = candidate;
    }
  }
  (void)rho;
  return (p.array() + theta).cwiseMax(0.0);
}

namespace {

// Exact projection onto { y : lo <= sum_a y[s,a] <= hi for all s } with
// action-major storage. Groups are disjoint, so the slab projection
// decomposes per state.
Vector project_marginal_window(const Vector& p, int num_states, int num_actions,
                               double lo, double hi) {
  Vector out = p;
  for (int s = 0; s < num_states; ++s) {
    double marginal = 0.0;
    for (int a = 0; a < num_actions; ++a) marginal += p[a * num_states + s];
    const double target = std::clamp(marginal, lo, hi);
    const double shift = (target - marginal) / num_actions;
    if (shift != 0.0) {
      for (int a = 0; a < num_actions; ++a) out[a * num_states + s] += shift;
    }
  }
  return out;
}

using Projector = std::function<Vector(const Vector&)>;

Vector dykstra_impl(const std::vector<Projector>& projectors, const Vector& point,
                    const DykstraOptions& opts) {
  const std::size_t k = projectors.size();
  Vector x = point;
  std::vector<Vector> increments(k, Vector::Zero(point.size()));
  double residual = std::numeric_limits<double>::infinity();
  for (int cycle = 0; cycle < opts.max_iter; ++cycle) {
    for (std::size_t j = 0; j < k; ++j) {
      const Vector shifted = x + increments[j];
      Vector projected = projectors[j](shifted);
      increments[j] = shifted - projected;
      x = std::move(projected);
    }
    residual = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      residual = std::max(residual, (x - projectors[j](x)).norm());
    if (residual <= opts.tolerance) return x;
  }
  std::ostringstream msg;
  msg << "dykstra_project: no convergence after " << opts.max_iter
      << " cycles, residual " << residual;
  throw std::runtime_error(msg.str());
}

}  // namespace

Vector FeasibleSet::project(const Vector& p) const {
  require(p.size() == dim_, "project: dimension mismatch with set");
  switch (kind_) {
    case Kind::kUnbounded:
      return p;
    case Kind::kLinfBox:
      return p.cwiseMax(-radius_).cwiseMin(radius_);
    case Kind::kSimplex:
      return project_simplex(p);
    case Kind::kOccupancy: {
      const int s = num_states_;
      const int a = num_actions_;
      const double lo = marginal_low_;
      const double hi = marginal_high_;
      std::vector<Projector> projectors;
      projectors.emplace_back([](const Vector& v) { return project_simplex(v); });
      projectors.emplace_back([s, a, lo, hi](const Vector& v) {
        return project_marginal_window(v, s, a, lo, hi);
      });
      return dykstra_impl(projectors, p, DykstraOptions{});
    }
  }
  throw std::logic_error("project: unknown set kind");
}

Vector FeasibleSet::project_entropy(const Vector& q) const {
  require(q.size() == dim_, "project_entropy: dimension mismatch with set");
  require(q.minCoeff() >= 0.0, "project_entropy: negative input mass");
  switch (kind_) {
    case Kind::kSimplex: {
      const double total = q.sum();
      require(total > 0.0, "project_entropy: zero total mass");
      return q / total;
    }
    case Kind::kOccupancy: {
      // KL(y||q) = KL(marginals) + sum_s m_s KL(conditionals), so the
      // minimizer keeps q's conditionals and I-projects the marginals onto
      // { lo <= m <= hi, sum m = 1 }: m_s = clamp(t q_s, lo, hi) with t
      // solved by bisection (the sum is monotone in t).
      Vector marginal_q(num_states_);
      for (int s = 0; s < num_states_; ++s) {
        double m = 0.0;
        for (int a = 0; a < num_actions_; ++a) m += q[a * num_states_ + s];
        marginal_q[s] = std::max(m, kLogFloor);
      }
      auto mass_at = [&](double t) {
        double sum = 0.0;
        for (int s = 0; s < num_states_; ++s)
          sum += std::clamp(t * marginal_q[s], marginal_low_, marginal_high_);
        return sum;
      };
      double t_lo = 0.0;
      double t_hi = marginal_high_ / marginal_q.minCoeff();
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        (mass_at(mid) < 1.0 ? t_lo : t_hi) = mid;
      }
      const double t = 0.5 * (t_lo + t_hi);
      Vector out(dim_);
      double total = 0.0;
      for (int s = 0; s < num_states_; ++s) {
        const double target =
            std::clamp(t * marginal_q[s], marginal_low_, marginal_high_);
        if (marginal_q[s] <= kLogFloor) {
          // fully underflowed state: fall back to the uniform conditional
          for (int a = 0; a < num_actions_; ++a)
            out[a * num_states_ + s] = target / num_actions_;
        } else {
          const double scale = target / marginal_q[s];
          for (int a = 0; a < num_actions_; ++a)
            out[a * num_states_ + s] = q[a * num_states_ + s] * scale;
        }
        total += target;
      }
      out /= total;  // bisection residual ~1e-15
      return out;
    }
    case Kind::kLinfBox:
    case Kind::kUnbounded:
      throw std::domain_error("project_entropy: set is not simplex-like");
  }
  throw std::logic_error("project_entropy: unknown set kind");
}

double FeasibleSet::diameter(NormTag norm) const {
  switch (kind_) {
    case Kind::kUnbounded:
      throw std::domain_error("diameter: unbounded set");
    case Kind::kLinfBox:
      switch (norm) {
        case NormTag::kEuclideanL2: return 2.0 * radius_ * std::sqrt(double(dim_));
        case NormTag::kSumL1: return 2.0 * radius_ * dim_;
        case NormTag::kMaxLinf: return 2.0 * radius_;
      }
      break;
    case Kind::kSimplex:
      if (dim_ == 1) return 0.0;
      switch (norm) {
        case NormTag::kEuclideanL2: return std::sqrt(2.0);  // two vertices
        case NormTag::kSumL1: return 2.0;
        case NormTag::kMaxLinf: return 1.0;
      }
      break;
    case Kind::kOccupancy:
      // With >= 2 actions the full state marginal can move between actions,
      // so two points share marginals yet differ by total mass 2 in L1;
      // that matches the enclosing simplex and is attained. Other norms
      // have no closed form here.
      if (norm == NormTag::kSumL1 && num_actions_ >= 2) return 2.0;
      throw std::domain_error(
          "diameter: unsupported norm for occupancy set (only L1 with >= 2 "
          "actions has a closed form)");
  }
  throw std::invalid_argument("diameter: unknown norm");
}

Vector FeasibleSet::center() const {
  switch (kind_) {
    case Kind::kUnbounded:
    case Kind::kLinfBox:
      return Vector::Zero(dim_);
    case Kind::kSimplex:
    case Kind::kOccupancy:
      return Vector::Constant(dim_, 1.0 / dim_);
  }
  throw std::logic_error("center: unknown set kind");
}

std::string FeasibleSet::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::kUnbounded: out << "unbounded(" << dim_ << ")"; break;
    case Kind::kLinfBox: out << "linf_box(" << dim_ << ", r=" << radius_ << ")"; break;
    case Kind::kSimplex: out << "simplex(" << dim_ << ")"; break;
    case Kind::kOccupancy:
      out << "occupancy(" << num_states_ << "x" << num_actions_ << ", ["
          << marginal_low_ << ", " << marginal_high_ << "])";
      break;
  }
  return out.str();
}

Vector entropy_mirror_step(const Vector& point, const Vector& gradient,
                           double stepsize) {
  require(point.size() == gradient.size(), "entropy_mirror_step: dimension mismatch");
  require(point.size() >= 1, "entropy_mirror_step: empty point");
  require(point.minCoeff() > 0.0,
          "entropy_mirror_step: point must be strictly positive");
  require(std::isfinite(stepsize), "entropy_mirror_step: nonfinite stepsize");

  Vector w(point.size());
  for (Eigen::Index i = 0; i < point.size(); ++i)
    w[i] = std::log(std::max(point[i], kLogFloor)) - stepsize * gradient[i];
  const double m = w.maxCoeff();
  Vector out = (w.array() - m).exp();
  out /= out.sum();
  // exp() may underflow single coordinates to zero; keep the output strictly
  // positive without disturbing the sum beyond ~1e-294.
  out = out.cwiseMax(kLogFloor);
  out /= out.sum();
  return out;
}

Vector sample_point(const FeasibleSet& set, Rng& rng) {
  const int d = set.dim();
  Vector p(d);
  switch (set.kind()) {
    case FeasibleSet::Kind::kUnbounded:
      for (int i = 0; i < d; ++i) p[i] = rng.uniform(-2.0, 2.0);
      return p;
    case FeasibleSet::Kind::kLinfBox:
      for (int i = 0; i < d; ++i) p[i] = rng.uniform(-set.radius(), set.radius());
      return p;
    case FeasibleSet::Kind::kSimplex:
    case FeasibleSet::Kind::kOccupancy: {
      // Dirichlet(1,...,1) via normalized exponentials.
      double sum = 0.0;
      for (int i = 0; i < d; ++i) {
        p[i] = -std::log(std::max(rng.uniform01(), 1e-300));
        sum += p[i];
      }
      p /= sum;
      if (set.kind() == FeasibleSet::Kind::kOccupancy) p = set.project(p);
      return p;
    }
  }
  throw std::logic_error("sample_point: unknown set kind");
}

Vector dykstra_project(const std::vector<FeasibleSet>& components,
                       const Vector& point, const DykstraOptions& opts) {
  require(!components.empty(), "dykstra_project: no components");
  require(opts.tolerance > 0.0, "dykstra_project: tolerance must be positive");
  for (const auto& c : components)
    require(c.dim() == point.size(), "dykstra_project: dimension mismatch");
  std::vector<Projector> projectors;
  projectors.reserve(components.size());
  for (const auto& c : components)
    projectors.emplace_back([&c](const Vector& v) { return c.project(v); });
  return dykstra_impl(projectors, point, opts);
}

}  // namespace esp
