#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/rng.hpp"

namespace svosim {

// Network shape: one valid-padding conv stage with ReLU, a feedforward
// layer fed the flattened features plus a few extra scalar inputs
// (orientation one-hot), a GRU, and linear policy/value heads. The
// parameter count is a pure function of this spec.
struct ArchSpec {
  int obs_rows = 15;
  int obs_cols = 15;
  int obs_channels = 3;
  int extra_inputs = 4;
  int conv_channels = 6;
  int conv_kernel = 3;
  int conv_stride = 2;
  int hidden = 64;
  int gru = 64;
  int actions = 8;

  void validate() const {
    if (obs_rows < 1 || obs_cols < 1 || obs_channels < 1) {
      throw ConfigError("arch: observation dimensions must be positive");
    }
    if (conv_kernel < 1 || conv_stride < 1 || conv_channels < 1) {
      throw ConfigError("arch: conv parameters must be positive");
    }
    if (conv_kernel > obs_rows || conv_kernel > obs_cols) {
      throw ConfigError("arch: conv kernel larger than observation");
    }
    if (hidden < 1 || gru < 1 || actions < 2 || extra_inputs < 0) {
      throw ConfigError("arch: layer sizes must be positive");
    }
  }

  int conv_out_rows() const { return (obs_rows - conv_kernel) / conv_stride + 1; }
  int conv_out_cols() const { return (obs_cols - conv_kernel) / conv_stride + 1; }
  int conv_out() const { return conv_channels * conv_out_rows() * conv_out_cols(); }
  int obs_size() const { return obs_rows * obs_cols * obs_channels; }
  int fc_in() const { return conv_out() + extra_inputs; }

  int param_count() const {
    const int conv = conv_channels * obs_channels * conv_kernel * conv_kernel + conv_channels;
    const int fc = hidden * fc_in() + hidden;
    const int gru_p = 3 * (gru * hidden + gru * gru + gru);
    const int heads = actions * gru + actions + gru + 1;
    return conv + fc + gru_p + heads;
  }

  bool operator==(const ArchSpec&) const = default;
};

// Per-step activations retained for backpropagation through time.
struct StepCache {
  std::vector<double> x;          // conv input
  std::vector<double> extra;
  std::vector<double> conv_post;  // post-ReLU feature map
  std::vector<double> fc_in;
  std::vector<double> fc_post;    // GRU input
  std::vector<double> h_prev;
  std::vector<double> z, r, cand_in, n, h;  // cand_in = r * h_prev
  std::vector<double> logits, probs;
  double value = 0.0;
};

namespace detail {

inline void matvec(const double* w, const double* x, int out, int in, double* y) {
  for (int i = 0; i < out; ++i) {
    const double* row = w + static_cast<size_t>(i) * in;
    double acc = 0.0;
    for (int j = 0; j < in; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// dx += W^T dy
inline void matvec_t(const double* w, const double* dy, int out, int in, double* dx) {
  for (int i = 0; i < out; ++i) {
    const double* row = w + static_cast<size_t>(i) * in;
    const double d = dy[i];
    if (d == 0.0) continue;
    for (int j = 0; j < in; ++j) dx[j] += row[j] * d;
  }
}

// gW += dy x^T
inline void outer_acc(double* gw, const double* dy, const double* x, int out, int in) {
  for (int i = 0; i < out; ++i) {
    double* row = gw + static_cast<size_t>(i) * in;
    const double d = dy[i];
    if (d == 0.0) continue;
    for (int j = 0; j < in; ++j) row[j] += d * x[j];
  }
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace detail

inline void softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  probs.resize(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

inline double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Actor-critic network over a flat double-precision parameter vector.
// All forward state needed for gradients lives in caller-owned
// StepCache objects, so one Net instance can serve many concurrent
// readers as long as updates have exclusive access.
class Net {
 public:
  Net() = default;
  explicit Net(const ArchSpec& spec) : spec_(spec) {
    spec_.validate();
    compute_offsets();
    params_.assign(spec_.param_count(), 0.0);
  }

  const ArchSpec& spec() const { return spec_; }
  int param_count() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Small random weights so a fresh policy is near-uniform over actions;
  // the head weights get an extra shrink to keep initial logits tiny.
  void init(Rng& rng, double scale = 1.0) {
    auto fill = [&](int offset, int count, int fan_in, double extra) {
      const double bound = scale * extra / std::sqrt(static_cast<double>(fan_in));
      for (int i = 0; i < count; ++i) {
        params_[offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
      }
    };
    const int k2 = spec_.conv_kernel * spec_.conv_kernel;
    fill(off_conv_w_, spec_.conv_channels * spec_.obs_channels * k2, spec_.obs_channels * k2, 1.0);
    fill(off_fc_w_, spec_.hidden * spec_.fc_in(), spec_.fc_in(), 1.0);
    for (int g = 0; g < 3; ++g) {
      fill(gru_w(g), spec_.gru * spec_.hidden, spec_.hidden, 1.0);
      fill(gru_u(g), spec_.gru * spec_.gru, spec_.gru, 1.0);
    }
    fill(off_pi_w_, spec_.actions * spec_.gru, spec_.gru, 0.01);
    fill(off_v_w_, spec_.gru, spec_.gru, 0.01);
    // biases stay zero
  }

  // h_prev may be null for the episode-initial zero state.
  void forward_step(const std::vector<double>& x, const std::vector<double>& extra,
                    const double* h_prev, StepCache& c) const {
    if (static_cast<int>(x.size()) != spec_.obs_size() ||
        static_cast<int>(extra.size()) != spec_.extra_inputs) {
      throw std::invalid_argument("net: input shape mismatch");
    }
    const double* p = params_.data();
    c.x = x;
    c.extra = extra;

    // conv + ReLU
    const int orows = spec_.conv_out_rows(), ocols = spec_.conv_out_cols();
    const int k = spec_.conv_kernel, s = spec_.conv_stride;
    c.conv_post.assign(spec_.conv_out(), 0.0);
    for (int oc = 0; oc < spec_.conv_channels; ++oc) {
      for (int i = 0; i < orows; ++i) {
        for (int j = 0; j < ocols; ++j) {
          double acc = p[off_conv_b_ + oc];
          for (int ic = 0; ic < spec_.obs_channels; ++ic) {
            for (int ki = 0; ki < k; ++ki) {
              const double* in_row = x.data() + ((ic * spec_.obs_rows + i * s + ki) *
                                                 static_cast<size_t>(spec_.obs_cols)) + j * s;
              const double* w_row = p + off_conv_w_ + (((oc * spec_.obs_channels + ic) * k + ki) *
                                                       static_cast<size_t>(k));
              for (int kj = 0; kj < k; ++kj) acc += w_row[kj] * in_row[kj];
            }
          }
          c.conv_post[(oc * orows + i) * ocols + j] = acc > 0.0 ? acc : 0.0;
        }
      }
    }

    // feedforward + ReLU
    c.fc_in.resize(spec_.fc_in());
    std::copy(c.conv_post.begin(), c.conv_post.end(), c.fc_in.begin());
    std::copy(extra.begin(), extra.end(), c.fc_in.begin() + spec_.conv_out());
    c.fc_post.assign(spec_.hidden, 0.0);
    for (int i = 0; i < spec_.hidden; ++i) c.fc_post[i] = p[off_fc_b_ + i];
    detail::matvec(p + off_fc_w_, c.fc_in.data(), spec_.hidden, spec_.fc_in(), c.fc_post.data());
    for (double& v : c.fc_post) v = v > 0.0 ? v : 0.0;

    // GRU: z/r gates, candidate on the reset-gated state
    const int G = spec_.gru;
    c.h_prev.assign(G, 0.0);
    if (h_prev != nullptr) std::copy(h_prev, h_prev + G, c.h_prev.begin());
    auto gate = [&](int g, std::vector<double>& out, const double* state) {
      out.assign(G, 0.0);
      for (int i = 0; i < G; ++i) out[i] = p[gru_b(g) + i];
      detail::matvec(p + gru_w(g), c.fc_post.data(), G, spec_.hidden, out.data());
      detail::matvec(p + gru_u(g), state, G, G, out.data());
    };
    gate(0, c.z, c.h_prev.data());
    gate(1, c.r, c.h_prev.data());
    for (int i = 0; i < G; ++i) {
      c.z[i] = detail::sigmoid(c.z[i]);
      c.r[i] = detail::sigmoid(c.r[i]);
    }
    c.cand_in.resize(G);
    for (int i = 0; i < G; ++i) c.cand_in[i] = c.r[i] * c.h_prev[i];
    gate(2, c.n, c.cand_in.data());
    for (int i = 0; i < G; ++i) c.n[i] = std::tanh(c.n[i]);
    c.h.resize(G);
    for (int i = 0; i < G; ++i) c.h[i] = (1.0 - c.z[i]) * c.n[i] + c.z[i] * c.h_prev[i];

    // heads
    c.logits.assign(spec_.actions, 0.0);
    for (int i = 0; i < spec_.actions; ++i) c.logits[i] = p[off_pi_b_ + i];
    detail::matvec(p + off_pi_w_, c.h.data(), spec_.actions, G, c.logits.data());
    softmax(c.logits, c.probs);
    c.value = p[off_v_b_];
    for (int i = 0; i < G; ++i) c.value += p[off_v_w_ + i] * c.h[i];
  }

  // One step of reverse-mode accumulation. dlogits/dvalue are the loss
  // gradients at this step's heads; dh carries the recurrent gradient
  // and is rewritten with the gradient w.r.t. the previous hidden state.
  void backward_step(const StepCache& c, const std::vector<double>& dlogits, double dvalue,
                     std::vector<double>& dh, std::vector<double>& grad) const {
    const double* p = params_.data();
    double* g = grad.data();
    const int G = spec_.gru;

    // heads
    scratch_dh_.assign(G, 0.0);
    detail::outer_acc(g + off_pi_w_, dlogits.data(), c.h.data(), spec_.actions, G);
    for (int i = 0; i < spec_.actions; ++i) g[off_pi_b_ + i] += dlogits[i];
    detail::matvec_t(p + off_pi_w_, dlogits.data(), spec_.actions, G, scratch_dh_.data());
    if (dvalue != 0.0) {
      for (int i = 0; i < G; ++i) {
        g[off_v_w_ + i] += dvalue * c.h[i];
        scratch_dh_[i] += dvalue * p[off_v_w_ + i];
      }
      g[off_v_b_] += dvalue;
    }
    if (dh.empty()) dh.assign(G, 0.0);
    for (int i = 0; i < G; ++i) scratch_dh_[i] += dh[i];

    // GRU
    scratch_dx_.assign(spec_.hidden, 0.0);
    scratch_dhprev_.assign(G, 0.0);
    scratch_da_.resize(G);
    // candidate branch
    for (int i = 0; i < G; ++i) {
      const double dn = scratch_dh_[i] * (1.0 - c.z[i]);
      scratch_da_[i] = dn * (1.0 - c.n[i] * c.n[i]);
      scratch_dhprev_[i] += scratch_dh_[i] * c.z[i];
    }
    detail::outer_acc(g + gru_w(2), scratch_da_.data(), c.fc_post.data(), G, spec_.hidden);
    detail::outer_acc(g + gru_u(2), scratch_da_.data(), c.cand_in.data(), G, G);
    for (int i = 0; i < G; ++i) g[gru_b(2) + i] += scratch_da_[i];
    detail::matvec_t(p + gru_w(2), scratch_da_.data(), G, spec_.hidden, scratch_dx_.data());
    scratch_dc_.assign(G, 0.0);
    detail::matvec_t(p + gru_u(2), scratch_da_.data(), G, G, scratch_dc_.data());
    // reset gate
    for (int i = 0; i < G; ++i) {
      scratch_dhprev_[i] += scratch_dc_[i] * c.r[i];
      const double dr = scratch_dc_[i] * c.h_prev[i];
      scratch_da_[i] = dr * c.r[i] * (1.0 - c.r[i]);
    }
    detail::outer_acc(g + gru_w(1), scratch_da_.data(), c.fc_post.data(), G, spec_.hidden);
    detail::outer_acc(g + gru_u(1), scratch_da_.data(), c.h_prev.data(), G, G);
    for (int i = 0; i < G; ++i) g[gru_b(1) + i] += scratch_da_[i];
    detail::matvec_t(p + gru_w(1), scratch_da_.data(), G, spec_.hidden, scratch_dx_.data());
    detail::matvec_t(p + gru_u(1), scratch_da_.data(), G, G, scratch_dhprev_.data());
    // update gate
    for (int i = 0; i < G; ++i) {
      const double dz = scratch_dh_[i] * (c.h_prev[i] - c.n[i]);
      scratch_da_[i] = dz * c.z[i] * (1.0 - c.z[i]);
    }
    detail::outer_acc(g + gru_w(0), scratch_da_.data(), c.fc_post.data(), G, spec_.hidden);
    detail::outer_acc(g + gru_u(0), scratch_da_.data(), c.h_prev.data(), G, G);
    for (int i = 0; i < G; ++i) g[gru_b(0) + i] += scratch_da_[i];
    detail::matvec_t(p + gru_w(0), scratch_da_.data(), G, spec_.hidden, scratch_dx_.data());
    detail::matvec_t(p + gru_u(0), scratch_da_.data(), G, G, scratch_dhprev_.data());
    dh = scratch_dhprev_;

    // feedforward
    for (int i = 0; i < spec_.hidden; ++i) {
      if (c.fc_post[i] <= 0.0) scratch_dx_[i] = 0.0;
    }
    detail::outer_acc(g + off_fc_w_, scratch_dx_.data(), c.fc_in.data(), spec_.hidden,
                      spec_.fc_in());
    for (int i = 0; i < spec_.hidden; ++i) g[off_fc_b_ + i] += scratch_dx_[i];
    scratch_dfcin_.assign(spec_.fc_in(), 0.0);
    detail::matvec_t(p + off_fc_w_, scratch_dx_.data(), spec_.hidden, spec_.fc_in(),
                     scratch_dfcin_.data());

    // conv (no gradient needed w.r.t. the observation itself)
    const int orows = spec_.conv_out_rows(), ocols = spec_.conv_out_cols();
    const int k = spec_.conv_kernel, s = spec_.conv_stride;
    for (int oc = 0; oc < spec_.conv_channels; ++oc) {
      for (int i = 0; i < orows; ++i) {
        for (int j = 0; j < ocols; ++j) {
          const int idx = (oc * orows + i) * ocols + j;
          if (c.conv_post[idx] <= 0.0) continue;
          const double d = scratch_dfcin_[idx];
          if (d == 0.0) continue;
          g[off_conv_b_ + oc] += d;
          for (int ic = 0; ic < spec_.obs_channels; ++ic) {
            for (int ki = 0; ki < k; ++ki) {
              const double* in_row = c.x.data() + ((ic * spec_.obs_rows + i * s + ki) *
                                                   static_cast<size_t>(spec_.obs_cols)) + j * s;
              double* w_row = g + off_conv_w_ + (((oc * spec_.obs_channels + ic) * k + ki) *
                                                 static_cast<size_t>(k));
              for (int kj = 0; kj < k; ++kj) w_row[kj] += d * in_row[kj];
            }
          }
        }
      }
    }
  }

 private:
  void compute_offsets() {
    const int k2 = spec_.conv_kernel * spec_.conv_kernel;
    int o = 0;
    off_conv_w_ = o; o += spec_.conv_channels * spec_.obs_channels * k2;
    off_conv_b_ = o; o += spec_.conv_channels;
    off_fc_w_ = o; o += spec_.hidden * spec_.fc_in();
    off_fc_b_ = o; o += spec_.hidden;
    for (int g = 0; g < 3; ++g) {
      off_gru_w_[g] = o; o += spec_.gru * spec_.hidden;
      off_gru_u_[g] = o; o += spec_.gru * spec_.gru;
      off_gru_b_[g] = o; o += spec_.gru;
    }
    off_pi_w_ = o; o += spec_.actions * spec_.gru;
    off_pi_b_ = o; o += spec_.actions;
    off_v_w_ = o; o += spec_.gru;
    off_v_b_ = o; o += 1;
    if (o != spec_.param_count()) throw std::logic_error("net: offset/param-count mismatch");
  }

  int gru_w(int g) const { return off_gru_w_[g]; }
  int gru_u(int g) const { return off_gru_u_[g]; }
  int gru_b(int g) const { return off_gru_b_[g]; }

  ArchSpec spec_;
  std::vector<double> params_;
  int off_conv_w_ = 0, off_conv_b_ = 0;
  int off_fc_w_ = 0, off_fc_b_ = 0;
  int off_gru_w_[3] = {0, 0, 0}, off_gru_u_[3] = {0, 0, 0}, off_gru_b_[3] = {0, 0, 0};
  int off_pi_w_ = 0, off_pi_b_ = 0;
  int off_v_w_ = 0, off_v_b_ = 0;
  mutable std::vector<double> scratch_dh_, scratch_dx_, scratch_dhprev_, scratch_da_,
      scratch_dc_, scratch_dfcin_;
};

// Adam with bias correction; state sized lazily on first step.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<double> m, v;

  void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    if (grad.size() != params.size() || m.size() != params.size()) {
      throw std::invalid_argument("adam: size mismatch");
    }
    t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

// Returns the pre-clip norm; scales grad in place when above max_norm.
inline double clip_by_global_norm(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

}  // namespace svosim
