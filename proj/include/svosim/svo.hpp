#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "svosim/common.hpp"

namespace svosim {

// An agent's social value orientation: a target reward angle in radians
// and the weight of the penalty for deviating from it. Traits are fixed
// at agent creation and never change during training.
struct SvoParams {
  double theta_svo = 0.0;  // radians, non-negative quadrant [0, pi/2]
  double weight = 0.0;     // penalty weight w

  void validate() const {
    if (!(theta_svo >= 0.0 && theta_svo <= kPi / 2.0 + 1e-12)) {
      throw ConfigError("svo: theta must lie in [0, pi/2] radians");
    }
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw ConfigError("svo: weight must be finite and non-negative");
    }
  }
};

// Exponentially smoothed per-agent reward traces, e <- lambda * e + r.
// With a constant reward r the trace converges to r / (1 - lambda);
// reward angles computed on the traces reflect recent history instead
// of a single sparse step.
class SmoothedRewards {
 public:
  SmoothedRewards() = default;
  explicit SmoothedRewards(int n_agents, double lambda = 0.975)
      : lambda_(lambda), trace_(static_cast<size_t>(n_agents), 0.0) {
    if (n_agents < 1) throw ConfigError("smoothed rewards: need at least one agent");
    if (!(lambda >= 0.0 && lambda < 1.0)) {
      throw ConfigError("smoothed rewards: lambda must lie in [0, 1)");
    }
  }

  void reset() { trace_.assign(trace_.size(), 0.0); }

  void update(const RewardVector& rewards) {
    if (rewards.size() != trace_.size()) {
      throw std::invalid_argument("smoothed rewards: size mismatch");
    }
    for (size_t i = 0; i < trace_.size(); ++i) {
      trace_[i] = lambda_ * trace_[i] + rewards[i];
    }
  }

  double lambda() const { return lambda_; }
  int size() const { return static_cast<int>(trace_.size()); }
  double trace(int i) const { return trace_.at(i); }
  const std::vector<double>& traces() const { return trace_; }

 private:
  double lambda_ = 0.975;
  std::vector<double> trace_;
};

// Angle of the reward vector seen from one agent's perspective: the
// mean of the other agents' rewards against its own. When both
// components are zero the angle is undefined; callers pass a fallback
// (typically the agent's own target angle, making the penalty vanish).
inline double reward_angle(double own, double others_mean, double fallback) {
  if (own == 0.0 && others_mean == 0.0) return fallback;
  return std::atan2(others_mean, own);
}

// Absolute angular difference wrapped onto [0, pi].
inline double angular_distance(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

// Intrinsic-shaped utility: extrinsic reward minus the weighted angular
// deviation from the agent's target angle.
inline double svo_utility(double extrinsic, const SvoParams& svo, double theta) {
  return extrinsic - svo.weight * angular_distance(svo.theta_svo, theta);
}

// Applies the orientation shaping to one step of extrinsic rewards.
// When traces is non-null the traces are updated with this step first
// and the angles are computed on the smoothed values; otherwise the raw
// step rewards are used. With a single agent the others-mean is zero.
inline RewardVector transform_step_rewards(const RewardVector& extrinsic,
                                           const std::vector<SvoParams>& svo,
                                           SmoothedRewards* traces) {
  const size_t n = extrinsic.size();
  if (svo.size() != n) throw std::invalid_argument("svo transform: size mismatch");
  if (traces != nullptr) {
    if (static_cast<size_t>(traces->size()) != n) {
      throw std::invalid_argument("svo transform: trace size mismatch");
    }
    traces->update(extrinsic);
  }
  const std::vector<double>& src = traces != nullptr ? traces->traces() : extrinsic;
  double sum = 0.0;
  for (double v : src) sum += v;
  RewardVector out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double others_mean = n > 1 ? (sum - src[i]) / static_cast<double>(n - 1) : 0.0;
    const double theta = reward_angle(src[i], others_mean, svo[i].theta_svo);
    out[i] = svo_utility(extrinsic[i], svo[i], theta);
  }
  return out;
}

}  // namespace svosim
