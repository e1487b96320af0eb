#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/net.hpp"
#include "svosim/rng.hpp"

namespace svosim {

struct LearnerConfig {
  double gamma = 0.99;
  double learning_rate = 4e-4;
  double entropy_coef = 0.003;
  double value_coef = 0.5;
  double max_grad_norm = 0.0;  // 0 disables clipping
  int batch_size = 1;          // trajectories per update round, advisory

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learner: gamma must lie in [0, 1)");
    if (!(learning_rate >= 0.0)) throw ConfigError("learner: learning rate must be >= 0");
    if (!(entropy_coef >= 0.0)) throw ConfigError("learner: entropy coefficient must be >= 0");
    if (!(value_coef >= 0.0)) throw ConfigError("learner: value coefficient must be >= 0");
    if (!(max_grad_norm >= 0.0)) throw ConfigError("learner: grad-norm cap must be >= 0");
    if (batch_size < 1) throw ConfigError("learner: batch size must be >= 1");
  }
};

// One agent's episode as the learner consumes it. Observations are kept
// in raw byte form and scaled to [0,1] at forward time; extras carry
// the orientation one-hot. All per-step sequences share one length.
struct Trajectory {
  int agent_id = -1;
  int steps = 0;
  std::vector<uint8_t> obs;     // steps x obs_size
  std::vector<double> extras;   // steps x extra_inputs
  std::vector<int> actions;
  std::vector<double> log_probs;  // at act time, diagnostics only
  std::vector<double> values;     // at act time, diagnostics only
  RewardVector extrinsic;
  RewardVector utility;

  void reserve_steps(int t, const ArchSpec& spec) {
    obs.reserve(static_cast<size_t>(t) * spec.obs_size());
    extras.reserve(static_cast<size_t>(t) * spec.extra_inputs);
    actions.reserve(t);
    log_probs.reserve(t);
    values.reserve(t);
    extrinsic.reserve(t);
    utility.reserve(t);
  }

  void check(const ArchSpec& spec) const {
    const size_t t = static_cast<size_t>(steps);
    if (obs.size() != t * spec.obs_size() || extras.size() != t * spec.extra_inputs ||
        actions.size() != t || extrinsic.size() != t || utility.size() != t) {
      throw std::invalid_argument("trajectory: sequence lengths disagree");
    }
  }

  double extrinsic_return() const {
    double s = 0.0;
    for (double r : extrinsic) s += r;
    return s;
  }
  double utility_return() const {
    double s = 0.0;
    for (double r : utility) s += r;
    return s;
  }
};

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

// Scratch for act(); owned by the caller so one policy instance can
// serve concurrent readers without shared mutable state.
struct ActWorkspace {
  StepCache cache;
  std::vector<double> x, extra;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;
  double mean_extrinsic_return = 0.0;
  double mean_utility_return = 0.0;
  int trajectories = 0;
  int steps = 0;
  bool applied = false;
  std::string note;
};

inline void encode_obs(const uint8_t* raw, int n, std::vector<double>& out) {
  out.resize(n);
  for (int i = 0; i < n; ++i) out[i] = raw[i] / 255.0;
}

// Monte Carlo discounted return of a completed episode (no bootstrap).
inline std::vector<double> discounted_returns(const RewardVector& rewards, double gamma) {
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

// A learnable policy: network parameters plus optimizer state. act() is
// read-only on parameters; update() requires exclusive access.
class PolicyHandle {
 public:
  PolicyHandle() = default;
  PolicyHandle(const ArchSpec& spec, uint64_t init_seed) : net_(spec) {
    Rng rng(init_seed);
    net_.init(rng);
  }

  const ArchSpec& spec() const { return net_.spec(); }
  Net& net() { return net_; }
  const Net& net() const { return net_; }
  AdamState& optimizer() { return adam_; }

  std::vector<double> initial_state() const { return std::vector<double>(spec().gru, 0.0); }

  // Samples an action from the softmax over logits (argmax in greedy
  // mode) and advances the recurrent state in place.
  ActResult act(const uint8_t* obs_raw, const double* extra, std::vector<double>& h, Rng& rng,
                ActWorkspace& ws, bool greedy = false) const {
    const ArchSpec& s = spec();
    encode_obs(obs_raw, s.obs_size(), ws.x);
    ws.extra.assign(extra, extra + s.extra_inputs);
    if (static_cast<int>(h.size()) != s.gru) {
      throw std::invalid_argument("act: recurrent state size mismatch");
    }
    net_.forward_step(ws.x, ws.extra, h.data(), ws.cache);
    const StepCache& cache = ws.cache;
    ActResult out;
    if (greedy) {
      out.action = 0;
      for (int i = 1; i < s.actions; ++i) {
        if (cache.logits[i] > cache.logits[out.action]) out.action = i;
      }
    } else {
      const double u = rng.uniform();
      double cum = 0.0;
      out.action = s.actions - 1;
      for (int i = 0; i < s.actions; ++i) {
        cum += cache.probs[i];
        if (u < cum) {
          out.action = i;
          break;
        }
      }
    }
    out.log_prob = log_prob_of(cache.logits, out.action);
    out.value = cache.value;
    h = cache.h;
    return out;
  }

  // Forwards each trajectory at the current parameters and returns the
  // per-step advantages G_t - V_t. The result is treated as a constant
  // in the loss: perturbing the parameters afterwards must not change
  // it, which is what makes the finite-difference check well-posed.
  std::vector<std::vector<double>> compute_advantages(const std::vector<Trajectory>& batch,
                                                      const LearnerConfig& cfg) const {
    std::vector<std::vector<double>> advantages(batch.size());
    StepCache cache;
    std::vector<double> x, extra, h;
    for (size_t b = 0; b < batch.size(); ++b) {
      const Trajectory& tr = batch[b];
      tr.check(spec());
      const auto g = discounted_returns(tr.utility, cfg.gamma);
      advantages[b].resize(tr.steps);
      h.assign(spec().gru, 0.0);
      for (int t = 0; t < tr.steps; ++t) {
        forward_traj_step(tr, t, h, cache, x, extra);
        advantages[b][t] = g[t] - cache.value;
        h = cache.h;
      }
    }
    return advantages;
  }

  // Mean per-step loss over the batch with the advantages held fixed:
  //   -log pi(a|s) * A  +  c_v (V - G)^2  -  c_e H(pi)
  double a2c_loss(const std::vector<Trajectory>& batch, const LearnerConfig& cfg,
                  const std::vector<std::vector<double>>& fixed_advantages) const {
    return run_batch(batch, cfg, fixed_advantages, nullptr, nullptr);
  }

  // Same loss with reverse-mode gradients accumulated into grad.
  double a2c_loss_and_grad(const std::vector<Trajectory>& batch, const LearnerConfig& cfg,
                           const std::vector<std::vector<double>>& fixed_advantages,
                           std::vector<double>& grad, UpdateStats* stats = nullptr) const {
    grad.assign(net_.param_count(), 0.0);
    return run_batch(batch, cfg, fixed_advantages, &grad, stats);
  }

  // One synchronous A2C step. A non-finite loss or gradient rejects the
  // update and leaves the parameters untouched; the stats say why.
  UpdateStats update(const std::vector<Trajectory>& batch, const LearnerConfig& cfg) {
    cfg.validate();
    if (batch.empty()) throw std::invalid_argument("update: empty batch");
    UpdateStats stats;
    const auto advantages = compute_advantages(batch, cfg);
    const double loss =
        a2c_loss_and_grad(batch, cfg, advantages, grad_, &stats);
    stats.trajectories = static_cast<int>(batch.size());
    double sum_ext = 0.0, sum_util = 0.0;
    for (const Trajectory& tr : batch) {
      sum_ext += tr.extrinsic_return();
      sum_util += tr.utility_return();
    }
    stats.mean_extrinsic_return = sum_ext / static_cast<double>(batch.size());
    stats.mean_utility_return = sum_util / static_cast<double>(batch.size());
    if (!std::isfinite(loss)) {
      stats.applied = false;
      stats.note = "non-finite loss";
      return stats;
    }
    for (double g : grad_) {
      if (!std::isfinite(g)) {
        stats.applied = false;
        stats.note = "non-finite gradient";
        return stats;
      }
    }
    stats.grad_norm = clip_by_global_norm(grad_, cfg.max_grad_norm);
    adam_.step(net_.params(), grad_, cfg.learning_rate);
    stats.applied = true;
    return stats;
  }

  // Versioned binary blob: header, architecture, parameters, optimizer
  // state, then a digest of everything before it.
  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out;
    auto put = [&out](const void* p, size_t n) {
      const uint8_t* b = static_cast<const uint8_t*>(p);
      out.insert(out.end(), b, b + n);
    };
    const uint32_t magic = kCheckpointMagic, version = 1;
    put(&magic, 4);
    put(&version, 4);
    const ArchSpec& s = spec();
    const int32_t arch[10] = {s.obs_rows, s.obs_cols, s.obs_channels, s.extra_inputs,
                              s.conv_channels, s.conv_kernel, s.conv_stride, s.hidden,
                              s.gru, s.actions};
    put(arch, sizeof(arch));
    const int64_t n_params = net_.param_count();
    put(&n_params, 8);
    put(net_.params().data(), sizeof(double) * net_.params().size());
    const int64_t adam_t = adam_.t;
    put(&adam_t, 8);
    put(&adam_.beta1, 8);
    put(&adam_.beta2, 8);
    put(&adam_.eps, 8);
    const uint8_t has_moments = adam_.m.empty() ? 0 : 1;
    put(&has_moments, 1);
    if (has_moments) {
      put(adam_.m.data(), sizeof(double) * adam_.m.size());
      put(adam_.v.data(), sizeof(double) * adam_.v.size());
    }
    const uint64_t digest = fnv1a64(out.data(), out.size());
    put(&digest, 8);
    return out;
  }

  static PolicyHandle deserialize(const uint8_t* data, size_t size) {
    size_t pos = 0;
    auto get = [&](void* dst, size_t n) {
      if (pos + n > size) throw IntegrityError("checkpoint: truncated blob");
      std::memcpy(dst, data + pos, n);
      pos += n;
    };
    uint32_t magic = 0, version = 0;
    get(&magic, 4);
    get(&version, 4);
    if (magic != kCheckpointMagic) throw IntegrityError("checkpoint: bad magic");
    if (version != 1) throw IntegrityError("checkpoint: unsupported version");
    int32_t arch[10];
    get(arch, sizeof(arch));
    ArchSpec s;
    s.obs_rows = arch[0]; s.obs_cols = arch[1]; s.obs_channels = arch[2];
    s.extra_inputs = arch[3]; s.conv_channels = arch[4]; s.conv_kernel = arch[5];
    s.conv_stride = arch[6]; s.hidden = arch[7]; s.gru = arch[8]; s.actions = arch[9];
    PolicyHandle h;
    h.net_ = Net(s);
    int64_t n_params = 0;
    get(&n_params, 8);
    if (n_params != h.net_.param_count()) {
      throw IntegrityError("checkpoint: parameter count does not match architecture");
    }
    get(h.net_.params().data(), sizeof(double) * n_params);
    int64_t adam_t = 0;
    get(&adam_t, 8);
    h.adam_.t = adam_t;
    get(&h.adam_.beta1, 8);
    get(&h.adam_.beta2, 8);
    get(&h.adam_.eps, 8);
    uint8_t has_moments = 0;
    get(&has_moments, 1);
    if (has_moments) {
      h.adam_.m.resize(n_params);
      h.adam_.v.resize(n_params);
      get(h.adam_.m.data(), sizeof(double) * n_params);
      get(h.adam_.v.data(), sizeof(double) * n_params);
    }
    if (pos + 8 != size) throw IntegrityError("checkpoint: trailing bytes");
    const uint64_t expect = fnv1a64(data, pos);
    uint64_t digest = 0;
    get(&digest, 8);
    if (digest != expect) throw IntegrityError("checkpoint: content digest mismatch");
    return h;
  }

  void save(const std::string& path) const {
    const auto blob = serialize();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!f) throw std::runtime_error("short write on checkpoint: " + path);
  }

  static PolicyHandle load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
    std::vector<uint8_t> blob((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    return deserialize(blob.data(), blob.size());
  }

  static double log_prob_of(const std::vector<double>& logits, int action) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return logits[action] - mx - std::log(sum);
  }

 private:
  static constexpr uint32_t kCheckpointMagic = 0x4b435653;  // "SVCK", little-endian

  void forward_traj_step(const Trajectory& tr, int t, const std::vector<double>& h,
                         StepCache& cache, std::vector<double>& x,
                         std::vector<double>& extra) const {
    const ArchSpec& s = spec();
    encode_obs(tr.obs.data() + static_cast<size_t>(t) * s.obs_size(), s.obs_size(), x);
    const double* e = tr.extras.data() + static_cast<size_t>(t) * s.extra_inputs;
    extra.assign(e, e + s.extra_inputs);
    net_.forward_step(x, extra, h.data(), cache);
  }

  double run_batch(const std::vector<Trajectory>& batch, const LearnerConfig& cfg,
                   const std::vector<std::vector<double>>& fixed_advantages,
                   std::vector<double>* grad, UpdateStats* stats) const {
    if (fixed_advantages.size() != batch.size()) {
      throw std::invalid_argument("a2c: advantage batch size mismatch");
    }
    long total_steps = 0;
    for (const Trajectory& tr : batch) total_steps += tr.steps;
    if (total_steps == 0) throw std::invalid_argument("a2c: empty trajectories");
    const double scale = 1.0 / static_cast<double>(total_steps);

    double policy_loss = 0.0, value_loss = 0.0, entropy_sum = 0.0;
    std::vector<double> x, extra, h, dh, dlogits;
    std::vector<StepCache> caches;
    for (size_t b = 0; b < batch.size(); ++b) {
      const Trajectory& tr = batch[b];
      tr.check(spec());
      if (fixed_advantages[b].size() != static_cast<size_t>(tr.steps)) {
        throw std::invalid_argument("a2c: advantage length mismatch");
      }
      const auto g_t = discounted_returns(tr.utility, cfg.gamma);
      caches.resize(tr.steps);
      h.assign(spec().gru, 0.0);
      for (int t = 0; t < tr.steps; ++t) {
        forward_traj_step(tr, t, h, caches[t], x, extra);
        h = caches[t].h;
        const StepCache& c = caches[t];
        const double adv = fixed_advantages[b][t];
        const double logp = log_prob_of(c.logits, tr.actions[t]);
        const double ent = entropy(c.probs);
        policy_loss += -logp * adv;
        value_loss += (c.value - g_t[t]) * (c.value - g_t[t]);
        entropy_sum += ent;
      }
      if (grad != nullptr) {
        dh.assign(spec().gru, 0.0);
        dlogits.resize(spec().actions);
        for (int t = tr.steps - 1; t >= 0; --t) {
          const StepCache& c = caches[t];
          const double adv = fixed_advantages[b][t];
          const double ent = entropy(c.probs);
          for (int j = 0; j < spec().actions; ++j) {
            const double indicator = j == tr.actions[t] ? 1.0 : 0.0;
            const double d_pg = adv * (c.probs[j] - indicator);
            const double d_ent =
                cfg.entropy_coef * c.probs[j] * (std::log(std::max(c.probs[j], 1e-300)) + ent);
            dlogits[j] = scale * (d_pg + d_ent);
          }
          const double dvalue = scale * 2.0 * cfg.value_coef * (c.value - g_t[t]);
          net_.backward_step(c, dlogits, dvalue, dh, *grad);
        }
      }
    }
    const double loss =
        scale * (policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy_sum);
    if (stats != nullptr) {
      stats->policy_loss = scale * policy_loss;
      stats->value_loss = scale * value_loss;
      stats->entropy = scale * entropy_sum;
      stats->total_loss = loss;
      stats->steps = static_cast<int>(total_steps);
    }
    return loss;
  }

  Net net_;
  AdamState adam_;
  std::vector<double> grad_;
};

}  // namespace svosim
