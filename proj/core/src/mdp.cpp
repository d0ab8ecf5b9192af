// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/mdp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "espkit/parallel.hpp"

namespace esp {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Matrix policy_transition(const MdpInstance& mdp, const PolicyMatrix& policy) {
  Matrix p = Matrix::Zero(mdp.num_states, mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a)
    p += policy.prob.col(a).asDiagonal() * mdp.transitions[a];
  return p;
}

}  // namespace

void MdpInstance::validate() const {
  require(num_states >= 1 && num_actions >= 1, "mdp: empty state/action space");
  require(static_cast<int>(transitions.size()) == num_actions,
          "mdp: one transition matrix per action required");
  for (int a = 0; a < num_actions; ++a) {
    const Matrix& p = transitions[static_cast<std::size_t>(a)];
    require(p.rows() == num_states && p.cols() == num_states,
            "mdp: transition matrix dimension mismatch");
    require(p.minCoeff() >= 0.0, "mdp: negative transition probability");
    for (int s = 0; s < num_states; ++s)
      require(std::abs(p.row(s).sum() - 1.0) <= 1e-12,
              "mdp: transition row does not sum to 1");
  }
  require(rewards.rows() == num_states && rewards.cols() == num_actions,
          "mdp: reward matrix dimension mismatch");
  require(rewards.minCoeff() >= 0.0 && rewards.maxCoeff() <= 1.0,
          "mdp: rewards must lie in [0, 1]");
  require(reward_noise >= 0.0, "mdp: negative reward noise");
}

MdpInstance make_random_ergodic_mdp(int num_states, int num_actions,
                                    double min_transition_prob,
                                    std::uint64_t seed) {
  require(num_states >= 1 && num_actions >= 1,
          "make_random_ergodic_mdp: empty state/action space");
  require(min_transition_prob > 0.0 &&
              min_transition_prob <= 1.0 / num_states,
          "make_random_ergodic_mdp: min_transition_prob must be in (0, 1/S]");
  Rng rng(seed);
  MdpInstance mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.transitions.resize(static_cast<std::size_t>(num_actions));
  const double slack = 1.0 - num_states * min_transition_prob;
  for (int a = 0; a < num_actions; ++a) {
    Matrix p(num_states, num_states);
    for (int s = 0; s < num_states; ++s) {
      Vector w(num_states);
      for (int t = 0; t < num_states; ++t) w[t] = rng.uniform01() + 1e-12;
      w /= w.sum();
      for (int t = 0; t < num_states; ++t)
        p(s, t) = min_transition_prob + slack * w[t];
      p.row(s) /= p.row(s).sum();  // absorb rounding
    }
    mdp.transitions[static_cast<std::size_t>(a)] = std::move(p);
  }
  mdp.rewards = Matrix::NullaryExpr(num_states, num_actions,
                                    [&](Eigen::Index, Eigen::Index) {
                                      return rng.uniform01();
                                    });
  mdp.validate();
  return mdp;
}

std::string mdp_to_text(const MdpInstance& mdp) {
  std::ostringstream out;
  out.precision(17);
  out << "mdp 1\n";
  out << "states " << mdp.num_states << "\n";
  out << "actions " << mdp.num_actions << "\n";
  out << "reward_noise " << mdp.reward_noise << "\n";
  out << "rewards\n";
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a)
      out << (a ? " " : "") << mdp.rewards(s, a);
    out << "\n";
  }
  for (int a = 0; a < mdp.num_actions; ++a) {
    out << "transition " << a << "\n";
    const Matrix& p = mdp.transitions[static_cast<std::size_t>(a)];
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int t = 0; t < mdp.num_states; ++t) out << (t ? " " : "") << p(s, t);
      out << "\n";
    }
  }
  return out.str();
}

MdpInstance mdp_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  int version = 0;
  in >> token >> version;
  require(token == "mdp" && version == 1, "mdp_from_text: bad header");
  MdpInstance mdp;
  in >> token >> mdp.num_states;
  require(token == "states", "mdp_from_text: expected 'states'");
  in >> token >> mdp.num_actions;
  require(token == "actions", "mdp_from_text: expected 'actions'");
  in >> token >> mdp.reward_noise;
  require(token == "reward_noise", "mdp_from_text: expected 'reward_noise'");
  in >> token;
  require(token == "rewards", "mdp_from_text: expected 'rewards'");
  mdp.rewards.resize(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) in >> mdp.rewards(s, a);
  mdp.transitions.resize(static_cast<std::size_t>(mdp.num_actions));
  for (int a = 0; a < mdp.num_actions; ++a) {
    int index = -1;
    in >> token >> index;
    require(token == "transition" && index == a,
            "mdp_from_text: expected transition block");
    Matrix p(mdp.num_states, mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s)
      for (int t = 0; t < mdp.num_states; ++t) in >> p(s, t);
    mdp.transitions[static_cast<std::size_t>(a)] = std::move(p);
  }
  require(!in.fail(), "mdp_from_text: truncated input");
  mdp.validate();
  return mdp;
}

Vector stationary_distribution(const Matrix& transition) {
  const int s = static_cast<int>(transition.rows());
  Matrix m = Matrix::Identity(s, s) - transition.transpose();
  m.row(s - 1).setOnes();
  Vector rhs = Vector::Zero(s);
  rhs[s - 1] = 1.0;
  Vector lambda = m.partialPivLu().solve(rhs);
  const double residual =
      (transition.transpose() * lambda - lambda).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-10) || lambda.minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "stationary_distribution: chain not ergodic (residual " << residual
        << ", min mass " << lambda.minCoeff() << ")";
    throw std::runtime_error(msg.str());
  }
  return lambda;
}

MdpConstants estimate_mixing_constants(const MdpInstance& mdp,
                                       int extra_random_policies,
                                       std::uint64_t seed) {
  mdp.validate();
  const int s_count = mdp.num_states;
  const int a_count = mdp.num_actions;

  std::vector<PolicyMatrix> policies;
  // All deterministic policies when |A|^|S| stays enumerable.
  double det_count = 1.0;
  for (int i = 0; i < s_count; ++i) det_count *= a_count;
  if (det_count <= 4096.0) {
    const long total = static_cast<long>(det_count);
    for (long code = 0; code < total; ++code) {
      PolicyMatrix pi;
      pi.prob = Matrix::Zero(s_count, a_count);
      long rest = code;
      for (int s = 0; s < s_count; ++s) {
        pi.prob(s, static_cast<int>(rest % a_count)) = 1.0;
        rest /= a_count;
      }
      policies.push_back(std::move(pi));
    }
  }
  Rng rng(seed);
  for (int k = 0; k < extra_random_policies; ++k) {
    PolicyMatrix pi;
    pi.prob.resize(s_count, a_count);
    for (int s = 0; s < s_count; ++s) {
      double sum = 0.0;
      for (int a = 0; a < a_count; ++a) {
        pi.prob(s, a) = -std::log(std::max(rng.uniform01(), 1e-300));
        sum += pi.prob(s, a);
      }
      pi.prob.row(s) /= sum;
    }
    policies.push_back(std::move(pi));
  }

  MdpConstants out;
  out.policy_set_size = static_cast<int>(policies.size());
  double sqrt_tau = 1.0;
  int t_mix = 1;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const Matrix p = policy_transition(mdp, policies[k]);
    Vector lambda;
    try {
      lambda = stationary_distribution(p);
    } catch (const std::runtime_error& e) {
      std::ostringstream msg;
      msg << "estimate_mixing_constants: policy " << k << " failed: " << e.what();
      throw std::runtime_error(msg.str());
    }
    sqrt_tau = std::max({sqrt_tau, s_count * lambda.maxCoeff(),
                         1.0 / (s_count * lambda.minCoeff())});

    Matrix p_t = p;
    constexpr int kTCap = 100000;
    int t = 1;
    for (; t <= kTCap; ++t) {
      double tv = 0.0;
      for (int s = 0; s < s_count; ++s)
        tv = std::max(tv, 0.5 * (p_t.row(s).transpose() - lambda).lpNorm<1>());
      if (tv <= 0.25) break;
      p_t = p_t * p;
    }
    if (t > kTCap) {
      std::ostringstream msg;
      msg << "estimate_mixing_constants: policy " << k << " mixes slower than "
          << kTCap << " steps";
      throw std::runtime_error(msg.str());
    }
    t_mix = std::max(t_mix, t);
  }
  out.tau = sqrt_tau * sqrt_tau;
  out.t_mix = t_mix;
  return out;
}

ExactMdpSolution solve_average_reward_exact(const MdpInstance& mdp,
                                            double tolerance) {
  mdp.validate();
  require(tolerance > 0.0, "solve_average_reward_exact: tolerance must be > 0");
  const int s_count = mdp.num_states;
  const int a_count = mdp.num_actions;

  // Relative value iteration on the span seminorm.
  Vector h = Vector::Zero(s_count);
  Vector th(s_count);
  double span = std::numeric_limits<double>::infinity();
  constexpr int kIterCap = 1000000;
  for (int iter = 0; iter < kIterCap; ++iter) {
    for (int s = 0; s < s_count; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < a_count; ++a)
        best = std::max(best, mdp.rewards(s, a) +
                                  mdp.transitions[static_cast<std::size_t>(a)]
                                          .row(s)
                                          .dot(h));
      th[s] = best;
    }
    const Vector delta = th - h;
    span = delta.maxCoeff() - delta.minCoeff();
    h = th.array() - th[0];
    if (span <= tolerance) break;
  }
  if (span > tolerance) {
    std::ostringstream msg;
    msg << "solve_average_reward_exact: value iteration stuck at span residual "
        << span;
    throw std::runtime_error(msg.str());
  }

  ExactMdpSolution sol;
  sol.policy.prob = Matrix::Zero(s_count, a_count);
  for (int s = 0; s < s_count; ++s) {
    int best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < a_count; ++a) {
      const double q = mdp.rewards(s, a) +
                       mdp.transitions[static_cast<std::size_t>(a)].row(s).dot(h);
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    sol.policy.prob(s, best_a) = 1.0;
  }

  const Matrix p_pi = policy_transition(mdp, sol.policy);
  const Vector lambda = stationary_distribution(p_pi);
  sol.y_star = Vector::Zero(s_count * a_count);
  double gain = 0.0;
  for (int s = 0; s < s_count; ++s) {
    int a_star = 0;
    sol.policy.prob.row(s).maxCoeff(&a_star);
    sol.y_star[a_star * s_count + s] = lambda[s];
    gain += lambda[s] * mdp.rewards(s, a_star);
  }
  sol.v_star = gain;
  sol.x_star = h.array() - 0.5 * (h.maxCoeff() + h.minCoeff());

  // Optimality conditions of the primal-dual pair.
  const double complementarity = std::abs(sol.y_star.dot(Vector::NullaryExpr(
      s_count * a_count, [&](Eigen::Index i) {
        return mdp.rewards(static_cast<int>(i) % s_count,
                           static_cast<int>(i) / s_count);
      })) - sol.v_star);
  double primal_violation = 0.0;
  for (int a = 0; a < a_count; ++a) {
    const Vector slack =
        Vector::Constant(s_count, sol.v_star) + sol.x_star -
        mdp.transitions[static_cast<std::size_t>(a)] * sol.x_star -
        mdp.rewards.col(a);
    primal_violation = std::min(primal_violation, slack.minCoeff());
  }
  if (complementarity > 10.0 * tolerance || primal_violation < -10.0 * tolerance) {
    std::ostringstream msg;
    msg << "solve_average_reward_exact: optimality residuals exceeded (compl "
        << complementarity << ", primal " << primal_violation << ")";
    throw std::runtime_error(msg.str());
  }
  return sol;
}

MdpDatum sample_xi(const MdpInstance& mdp, Rng& rng) {
  MdpDatum d;
  d.next_state.resize(mdp.num_states, mdp.num_actions);
  d.reward.resize(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double u = rng.uniform01();
      double cdf = 0.0;
      int next = mdp.num_states - 1;
      for (int t = 0; t < mdp.num_states; ++t) {
        cdf += mdp.transitions[static_cast<std::size_t>(a)](s, t);
        if (u < cdf) {
          next = t;
          break;
        }
      }
      d.next_state(s, a) = next;
      double r = mdp.rewards(s, a);
      if (mdp.reward_noise > 0.0) {
        const double amp = std::min({mdp.reward_noise, r, 1.0 - r});
        r += amp * rng.uniform(-1.0, 1.0);
      }
      d.reward(s, a) = r;
    }
  }
  return d;
}

PolicyMatrix extract_policy(const Vector& y_bar, int num_states, int num_actions) {
  require(y_bar.size() == num_states * num_actions,
          "extract_policy: dimension mismatch");
  PolicyMatrix pi;
  pi.prob.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    double marginal = 0.0;
    for (int a = 0; a < num_actions; ++a) marginal += y_bar[a * num_states + s];
    require(marginal > 0.0, "extract_policy: zero state marginal");
    for (int a = 0; a < num_actions; ++a)
      pi.prob(s, a) = y_bar[a * num_states + s] / marginal;
  }
  return pi;
}

double evaluate_policy(const MdpInstance& mdp, const PolicyMatrix& policy) {
  require(policy.prob.rows() == mdp.num_states &&
              policy.prob.cols() == mdp.num_actions,
          "evaluate_policy: policy dimension mismatch");
  const Matrix p_pi = policy_transition(mdp, policy);
  const Vector lambda = stationary_distribution(p_pi);
  double v = 0.0;
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      v += lambda[s] * policy.prob(s, a) * mdp.rewards(s, a);
  return v;
}

// ---------------------------------------------------------------------------
// MdpSaddleProblem
// ---------------------------------------------------------------------------

MdpSaddleProblem::MdpSaddleProblem(MdpInstance mdp, MdpConstants constants,
                                   double tau_inflation)
    : mdp_(std::move(mdp)),
      constants_(constants),
      exact_(solve_average_reward_exact(mdp_)),
      set_x_(FeasibleSet::linf_box(mdp_.num_states, 2.0 * constants.t_mix)),
      set_y_([&] {
        require(tau_inflation >= 1.0, "mdp problem: tau inflation must be >= 1");
        const double tau_infl = tau_inflation * constants.tau;
        const double s = mdp_.num_states;
        return FeasibleSet::occupancy(mdp_.num_states, mdp_.num_actions,
                                      1.0 / (std::sqrt(tau_infl) * s),
                                      std::sqrt(tau_infl) / s);
      }()) {
  if (!set_x_.contains(exact_.x_star, 1e-9))
    throw std::runtime_error(
        "mdp problem: exact bias vector falls outside |x|_inf <= 2 t_mix; "
        "the mixing-time estimate is too small for this instance");
  if (!set_y_.contains(exact_.y_star, 1e-9))
    throw std::runtime_error(
        "mdp problem: exact occupancy falls outside the marginal window; "
        "the ergodicity estimate is too small for this instance");
  fill_constants();
}

void MdpSaddleProblem::fill_constants() {
  ProblemConstants c;
  c.mu_x = 0.0;
  c.mu_y = 0.0;
  // l_y(xi, x) = |grad_y|_inf <= r_max + |x|_inf + |P x|_inf <= 1 + 4 t_mix.
  c.lip_y_weak = c.lip_y_strong = 1.0 + 4.0 * constants_.t_mix;
  // Cross-gradient envelopes: |grad_x(y1) - grad_x(y2)|_2 <= sqrt(2)|dy|_1
  // and |grad_y(x1) - grad_y(x2)|_inf <= 2 |dx|_2; take the larger.
  c.grad_lip_x = 0.0;
  c.grad_lip_y = 0.0;
  c.grad_lip_xy = 2.0;
  c.diam_x = set_x_.diameter(NormTag::kEuclideanL2);
  c.diam_y = mdp_.num_actions >= 2 ? set_y_.diameter(NormTag::kSumL1) : 2.0;

  // l_x^w has no closed form; sampled supremum over feasible occupancies,
  // flagged as an estimate.
  Rng rng(0x6d6470636f6e7374ULL);
  const int y_points = 16;
  const int draws = 2000;
  double worst = 0.0;
  for (int k = 0; k <= y_points; ++k) {
    const Vector y = k == 0 ? set_y_.center() : sample_point(set_y_, rng);
    double acc = 0.0;
    for (int d = 0; d < draws; ++d) {
      const SampleDatum datum = sample(rng);
      acc += sample_grad_x(datum, Vector::Zero(mdp_.num_states), y).squaredNorm();
    }
    worst = std::max(worst, acc / draws);
  }
  c.lip_x_weak = c.lip_x_strong = std::sqrt(worst);
  c.lipschitz_estimated = true;
  problem_constants_ = c;
}

SampleDatum MdpSaddleProblem::sample(Rng& rng) const {
  return sample_xi(mdp_, rng);
}

double MdpSaddleProblem::sample_value(const SampleDatum& datum, const Vector& x,
                                      const Vector& y) const {
  const auto& d = std::get<MdpDatum>(datum);
  const int s_count = mdp_.num_states;
  double v = 0.0;
  for (int a = 0; a < mdp_.num_actions; ++a)
    for (int s = 0; s < s_count; ++s)
      v += y[a * s_count + s] * (d.reward(s, a) + x[d.next_state(s, a)] - x[s]);
  return v;
}

Vector MdpSaddleProblem::sample_grad_x(const SampleDatum& datum, const Vector&,
                                       const Vector& y) const {
  const auto& d = std::get<MdpDatum>(datum);
  const int s_count = mdp_.num_states;
  Vector g = Vector::Zero(s_count);
  for (int a = 0; a < mdp_.num_actions; ++a)
    for (int s = 0; s < s_count; ++s) {
      const double w = y[a * s_count + s];
      g[d.next_state(s, a)] += w;
      g[s] -= w;
    }
  return g;
}

Vector MdpSaddleProblem::sample_grad_y(const SampleDatum& datum, const Vector& x,
                                       const Vector&) const {
  const auto& d = std::get<MdpDatum>(datum);
  const int s_count = mdp_.num_states;
  Vector g(s_count * mdp_.num_actions);
  for (int a = 0; a < mdp_.num_actions; ++a)
    for (int s = 0; s < s_count; ++s)
      g[a * s_count + s] = d.reward(s, a) + x[d.next_state(s, a)] - x[s];
  return g;
}

double MdpSaddleProblem::sample_lipschitz_x(const SampleDatum& datum,
                                            const Vector& y) const {
  return sample_grad_x(datum, Vector::Zero(mdp_.num_states), y).norm();
}

double MdpSaddleProblem::sample_lipschitz_y(const SampleDatum& datum,
                                            const Vector& x) const {
  return sample_grad_y(datum, x, Vector()).lpNorm<Eigen::Infinity>();
}

EmpiricalAggregate MdpSaddleProblem::aggregate(const SampleSet& samples) const {
  require(samples.n() >= 1, "aggregate: empty sample set");
  const int s_count = mdp_.num_states;
  MdpAggregate agg;
  agg.transition.assign(static_cast<std::size_t>(mdp_.num_actions),
                        Matrix::Zero(s_count, s_count));
  agg.reward = Matrix::Zero(s_count, mdp_.num_actions);
  for (const SampleDatum& datum : samples.data) {
    const auto& d = std::get<MdpDatum>(datum);
    for (int a = 0; a < mdp_.num_actions; ++a)
      for (int s = 0; s < s_count; ++s) {
        agg.transition[static_cast<std::size_t>(a)](s, d.next_state(s, a)) += 1.0;
        agg.reward(s, a) += d.reward(s, a);
      }
  }
  for (auto& t : agg.transition) t /= samples.n();
  agg.reward /= samples.n();
  return agg;
}

EmpiricalAggregate MdpSaddleProblem::population_aggregate() const {
  return MdpAggregate{mdp_.transitions, mdp_.rewards};
}

double MdpSaddleProblem::aggregate_value(const EmpiricalAggregate& agg,
                                         const Vector& x, const Vector& y) const {
  const auto& m = std::get<MdpAggregate>(agg);
  const int s_count = mdp_.num_states;
  double v = 0.0;
  for (int a = 0; a < mdp_.num_actions; ++a) {
    const Vector px = m.transition[static_cast<std::size_t>(a)] * x;
    for (int s = 0; s < s_count; ++s)
      v += y[a * s_count + s] * (m.reward(s, a) + px[s] - x[s]);
  }
  return v;
}

Vector MdpSaddleProblem::aggregate_grad_x(const EmpiricalAggregate& agg,
                                          const Vector&, const Vector& y) const {
  const auto& m = std::get<MdpAggregate>(agg);
  const int s_count = mdp_.num_states;
  Vector g = Vector::Zero(s_count);
  for (int a = 0; a < mdp_.num_actions; ++a) {
    const auto y_a = y.segment(a * s_count, s_count);
    g += m.transition[static_cast<std::size_t>(a)].transpose() * y_a - y_a;
  }
  return g;
}

Vector MdpSaddleProblem::aggregate_grad_y(const EmpiricalAggregate& agg,
                                          const Vector& x, const Vector&) const {
  const auto& m = std::get<MdpAggregate>(agg);
  const int s_count = mdp_.num_states;
  Vector g(s_count * mdp_.num_actions);
  for (int a = 0; a < mdp_.num_actions; ++a) {
    const Vector px = m.transition[static_cast<std::size_t>(a)] * x;
    for (int s = 0; s < s_count; ++s)
      g[a * s_count + s] = m.reward(s, a) + px[s] - x[s];
  }
  return g;
}

std::optional<BestResponse> MdpSaddleProblem::aggregate_best_response(
    const EmpiricalAggregate& agg, const Regularizer& reg, Side side,
    const Vector& fixed) const {
  if (reg.kind() != Regularizer::Kind::kNone &&
      reg.kind() != Regularizer::Kind::kQuadraticEntropy)
    return std::nullopt;
  const int s_count = mdp_.num_states;
  const int a_count = mdp_.num_actions;
  BestResponse br;

  if (side == Side::kMinimizeX) {
    // minimize (alpha_x/2)|x|^2 + <g, x> over the box.
    const Vector g = aggregate_grad_x(agg, Vector::Zero(s_count), fixed);
    const double radius = set_x_.radius();
    Vector x(s_count);
    if (reg.alpha_x() > 0.0) {
      x = (-g / reg.alpha_x()).cwiseMax(-radius).cwiseMin(radius);
    } else {
      for (int s = 0; s < s_count; ++s)
        x[s] = g[s] > 0.0 ? -radius : (g[s] < 0.0 ? radius : 0.0);
    }
    br.value = aggregate_value(agg, x, fixed) + reg.value(x, fixed);
    br.point = std::move(x);
    return br;
  }

  // maximize <c, y> - alpha_y sum y log y over the occupancy set.
  const Vector c = aggregate_grad_y(agg, fixed, Vector());
  const double lo = set_y_.marginal_low();
  const double hi = set_y_.marginal_high();
  Vector y = Vector::Zero(s_count * a_count);
  const double alpha = reg.alpha_y();

  if (alpha > 0.0) {
    // Within a state the conditional distribution is a softmax; the state
    // marginals then solve a capped entropy allocation by bisection.
    std::vector<std::vector<double>> cond(static_cast<std::size_t>(s_count));
    std::vector<double> v_s(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
      std::vector<double> scaled(static_cast<std::size_t>(a_count));
      for (int a = 0; a < a_count; ++a) scaled[a] = c[a * s_count + s] / alpha;
      const double lse = logsumexp(scaled);
      v_s[s] = alpha * lse;
      auto& q = cond[static_cast<std::size_t>(s)];
      q.resize(static_cast<std::size_t>(a_count));
      for (int a = 0; a < a_count; ++a) q[a] = std::exp(scaled[a] - lse);
    }
    auto marginal_sum = [&](double lambda) {
      double sum = 0.0;
      for (int s = 0; s < s_count; ++s)
        sum += std::clamp(std::exp((v_s[s] - lambda) / alpha - 1.0), lo, hi);
      return sum;
    };
    double lambda_lo = *std::min_element(v_s.begin(), v_s.end()) -
                       alpha * (1.0 + std::log(hi));
    double lambda_hi = *std::max_element(v_s.begin(), v_s.end()) -
                       alpha * (1.0 + std::log(lo));
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lambda_lo + lambda_hi);
      (marginal_sum(mid) >= 1.0 ? lambda_lo : lambda_hi) = mid;
    }
    const double lambda = 0.5 * (lambda_lo + lambda_hi);
    double total = 0.0;
    std::vector<double> m(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
      m[s] = std::clamp(std::exp((v_s[s] - lambda) / alpha - 1.0), lo, hi);
      total += m[s];
    }
    for (int s = 0; s < s_count; ++s) {
      const double mass = m[s] / total;  // bisection residual ~1e-15
      for (int a = 0; a < a_count; ++a)
        y[a * s_count + s] = mass * cond[static_cast<std::size_t>(s)][a];
    }
  } else {
    // Linear objective: concentrate every state on its best action, then
    // allocate the marginal budget greedily (exact small LP).
    std::vector<int> best_action(static_cast<std::size_t>(s_count), 0);
    std::vector<double> best_value(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < a_count; ++a)
        if (c[a * s_count + s] > best) {
          best = c[a * s_count + s];
          best_action[static_cast<std::size_t>(s)] = a;
        }
      best_value[static_cast<std::size_t>(s)] = best;
    }
    std::vector<int> order(static_cast<std::size_t>(s_count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return best_value[static_cast<std::size_t>(a)] >
             best_value[static_cast<std::size_t>(b)];
    });
    std::vector<double> m(static_cast<std::size_t>(s_count), lo);
    double budget = 1.0 - s_count * lo;
    for (int s : order) {
      const double add = std::min(hi - lo, budget);
      m[static_cast<std::size_t>(s)] += add;
      budget -= add;
      if (budget <= 0.0) break;
    }
    for (int s = 0; s < s_count; ++s)
      y[best_action[static_cast<std::size_t>(s)] * s_count + s] =
          m[static_cast<std::size_t>(s)];
  }

  br.value = aggregate_value(agg, fixed, y) + reg.value(fixed, y);
  br.point = std::move(y);
  return br;
}

MdpProblemPtr make_mdp_saddle_problem(MdpInstance mdp, MdpConstants constants,
                                      double tau_inflation) {
  return std::make_shared<MdpSaddleProblem>(std::move(mdp), constants,
                                            tau_inflation);
}

namespace {

Regularizer mdp_objective_regularizer(const MdpConstants& c, int num_states,
                                 int num_actions, int n) {
  require(n >= 1, "mdp regularizer: n must be >= 1");
  const double s_count = num_states;
  const double sa = s_count * num_actions;
  require(sa > 1.0, "mdp regularizer: |S||A| must exceed 1 (log divisor)");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double alpha_x = std::pow(c.tau, 1.5) / (sqrt_n * s_count * c.t_mix);
  const double alpha_y = c.t_mix / std::sqrt(n * std::log(sa));
  const double bound_r =
      2.0 * alpha_x * s_count * c.t_mix * c.t_mix + alpha_y * std::log(sa);
  return Regularizer::quadratic_entropy(alpha_x, alpha_y, bound_r);
}

}  // namespace

EmpiricalObjective build_mdp_objective(const MdpProblemPtr& problem, SampleSet samples) {
  require(problem != nullptr, "build_mdp_objective: null problem");
  require(samples.n() >= 1, "build_mdp_objective: empty sample set");
  Regularizer reg =
      mdp_objective_regularizer(problem->mdp_constants(), problem->instance().num_states,
                           problem->instance().num_actions, samples.n());
  return EmpiricalObjective(problem, std::move(samples), std::move(reg));
}

RegularizerRule mdp_regularizer_rule() {
  return [](const StochasticSaddleProblem& problem, int n) {
    const auto* mdp = dynamic_cast<const MdpSaddleProblem*>(&problem);
    require(mdp != nullptr, "mdp_regularizer_rule: mdp family only");
    return mdp_objective_regularizer(mdp->mdp_constants(), mdp->instance().num_states,
                                mdp->instance().num_actions, n);
  };
}

MdpExperimentResult run_mdp_experiment(const MdpInstance& mdp,
                                       const MdpExperimentSpec& spec) {
  require(!spec.n_grid.empty(), "run_mdp_experiment: empty n grid");
  require(spec.replications >= 2, "run_mdp_experiment: needs >= 2 replications");
  for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
    require(spec.n_grid[i] > spec.n_grid[i - 1],
            "run_mdp_experiment: n grid must be strictly increasing");

  MdpExperimentResult result;
  result.constants = estimate_mixing_constants(
      mdp, spec.extra_random_policies, Rng::stream(spec.master_seed, 0xbeef)());
  const MdpProblemPtr problem =
      make_mdp_saddle_problem(mdp, result.constants, spec.tau_inflation);
  result.exact = problem->exact_solution();

  const PopulationObjective pop(problem);
  const double v_star = result.exact.v_star;
  const Vector& x_star = result.exact.x_star;
  const Vector& y_star = result.exact.y_star;
  const double log_sa = std::log(static_cast<double>(mdp.num_states) *
                                 static_cast<double>(mdp.num_actions));

  result.sweep.problem_tag = "mdp";
  result.sweep.replications = spec.replications;
  result.sweep.master_seed = spec.master_seed;
  result.sweep.extra_column = "residual_eq18";
  result.min_regret = std::numeric_limits<double>::infinity();

  for (std::size_t row_idx = 0; row_idx < spec.n_grid.size(); ++row_idx) {
    const int n = spec.n_grid[row_idx];
    std::vector<double> regrets(static_cast<std::size_t>(spec.replications));
    std::vector<double> residuals(static_cast<std::size_t>(spec.replications));

    parallel_for(
        static_cast<std::size_t>(spec.replications), spec.threads,
        [&](std::size_t r) {
          const std::uint64_t seed =
              Rng::stream(spec.master_seed, static_cast<std::uint64_t>(n),
                          static_cast<std::uint64_t>(r))();
          SampleSet samples = problem->draw_samples(seed, n);
          const EmpiricalObjective objective =
              build_mdp_objective(problem, std::move(samples));
          const SaddleSolution sol = solve_mirror_prox(objective, spec.solver);
          if (!sol.converged) {
            std::ostringstream msg;
            msg << "run_mdp_experiment: replication " << r << " at n=" << n
                << " did not converge (gap " << sol.certified_gap << ")";
            throw std::runtime_error(msg.str());
          }
          const PolicyMatrix policy =
              extract_policy(sol.y_hat, mdp.num_states, mdp.num_actions);
          const double v_pi = evaluate_policy(mdp, policy);
          regrets[r] = v_star - v_pi;

          // Stationarity identity: both routes to the same quantity must
          // agree to numerical precision.
          const double route_a = v_star - pop.value(x_star, sol.y_hat);
          const double route_b =
              pop.value(sol.x_hat, y_star) - pop.value(x_star, sol.y_hat);
          residuals[r] = std::abs(route_a - route_b);
        });

    RateRow row;
    row.n = n;
    row.metric = "regret";
    double mean = 0.0;
    for (double v : regrets) mean += v;
    mean /= spec.replications;
    double ss = 0.0;
    for (double v : regrets) ss += (v - mean) * (v - mean);
    row.mean = mean;
    row.std_error = std::sqrt(ss / (spec.replications - 1.0)) /
                    std::sqrt(static_cast<double>(spec.replications));
    row.replications = spec.replications;
    row.seed = Rng::stream(spec.master_seed, static_cast<std::uint64_t>(n))();
    row.bound = result.constants.t_mix * result.constants.tau / std::sqrt(double(n)) *
                (std::pow(result.constants.tau, 1.5) + std::sqrt(log_sa));
    row.extra = *std::max_element(residuals.begin(), residuals.end());
    result.max_eq18_residual = std::max(result.max_eq18_residual, row.extra);
    result.min_regret = std::min(
        result.min_regret, *std::min_element(regrets.begin(), regrets.end()));
    result.sweep.rows.push_back(std::move(row));
  }
  return result;
}

MomentEnvelopeReport check_mdp_moment_envelopes(const MdpProblemPtr& problem,
                                                int points, int xi_draws,
                                                std::uint64_t seed) {
  require(points >= 1 && xi_draws >= 1, "check_mdp_moment_envelopes: empty plan");
  const MdpInstance& mdp = problem->instance();
  const MdpConstants& c = problem->mdp_constants();
  Rng rng(seed);
  MomentEnvelopeReport report;
  report.grad_x_envelope =
      std::pow(c.tau, 3.0) / static_cast<double>(mdp.num_states);
  const double ly_sup = 1.0 + 4.0 * c.t_mix;
  report.grad_y_envelope = ly_sup * ly_sup;

  for (int k = 0; k < points; ++k) {
    const Vector y = sample_point(problem->set_y(), rng);
    const Vector x = sample_point(problem->set_x(), rng);
    double acc_x = 0.0, acc_y = 0.0;
    for (int d = 0; d < xi_draws; ++d) {
      const SampleDatum datum = problem->sample(rng);
      acc_x += problem
                   ->sample_grad_x(datum, Vector::Zero(mdp.num_states), y)
                   .squaredNorm();
      const double ly = problem->sample_lipschitz_y(datum, x);
      acc_y += ly * ly;
    }
    report.grad_x_moment = std::max(report.grad_x_moment, acc_x / xi_draws);
    report.grad_y_moment = std::max(report.grad_y_moment, acc_y / xi_draws);
  }
  return report;
}

}  // namespace esp
