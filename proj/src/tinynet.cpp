// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/tinynet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace vgloc::net {

namespace {

constexpr uint32_t kMagic = 0x544E4756;  // "VGNT"
constexpr uint32_t kVersion = 1;

struct ConvGeom {
  int out_h = 0, out_w = 0, pad_t = 0, pad_l = 0;
};

ConvGeom conv_geom(const LayerSpec& s, int in_h, int in_w) {
  ConvGeom g;
  if (s.pad == PadMode::Same) {
    g.out_h = (in_h + s.stride - 1) / s.stride;
    g.out_w = (in_w + s.stride - 1) / s.stride;
    const int total_h = std::max(0, (g.out_h - 1) * s.stride + s.kh - in_h);
    const int total_w = std::max(0, (g.out_w - 1) * s.stride + s.kw - in_w);
    g.pad_t = total_h / 2;
    g.pad_l = total_w / 2;
  } else {
    require(in_h >= s.kh && in_w >= s.kw, ErrorCode::ShapeMismatch,
            "conv kernel larger than input");
    g.out_h = (in_h - s.kh) / s.stride + 1;
    g.out_w = (in_w - s.kw) / s.stride + 1;
  }
  return g;
}

Shape3 layer_out_shape(const LayerSpec& s, const Shape3& in) {
  if (s.kind != LayerKind::Conv) return in;
  const ConvGeom g = conv_geom(s, in.h, in.w);
  return {s.out_c, g.out_h, g.out_w};
}

Shape3 propagate(const std::vector<LayerSpec>& layers, Shape3 in) {
  for (const LayerSpec& s : layers) in = layer_out_shape(s, in);
  return in;
}

Tensor4 conv_fwd(const Layer& layer, const Tensor4& x) {
  const LayerSpec& s = layer.spec;
  const ConvGeom g = conv_geom(s, x.h, x.w);
  Tensor4 y(1, s.out_c, g.out_h, g.out_w);
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        double acc = layer.bias[oc];
        for (int ic = 0; ic < layer.in_c; ++ic) {
          for (int ky = 0; ky < s.kh; ++ky) {
            const int iy = oy * s.stride + ky - g.pad_t;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < s.kw; ++kx) {
              const int ix = ox * s.stride + kx - g.pad_l;
              if (ix < 0 || ix >= x.w) continue;
              acc += layer.weights[((static_cast<size_t>(oc) * layer.in_c + ic) *
                                        s.kh +
                                    ky) *
                                       s.kw +
                                   kx] *
                     x.at(0, ic, iy, ix);
            }
          }
        }
        y.at(0, oc, oy, ox) = acc;
      }
    }
  }
  return y;
}

Tensor4 conv_bwd(Layer& layer, const Tensor4& gy, const Tensor4& x) {
  const LayerSpec& s = layer.spec;
  const ConvGeom g = conv_geom(s, x.h, x.w);
  Tensor4 gx(1, x.c, x.h, x.w);
  for (int oc = 0; oc < s.out_c; ++oc) {
    double gbias = 0;
    for (int oy = 0; oy < gy.h; ++oy) {
      for (int ox = 0; ox < gy.w; ++ox) {
        const double go = gy.at(0, oc, oy, ox);
        gbias += go;
        for (int ic = 0; ic < layer.in_c; ++ic) {
          for (int ky = 0; ky < s.kh; ++ky) {
            const int iy = oy * s.stride + ky - g.pad_t;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < s.kw; ++kx) {
              const int ix = ox * s.stride + kx - g.pad_l;
              if (ix < 0 || ix >= x.w) continue;
              const size_t wi =
                  ((static_cast<size_t>(oc) * layer.in_c + ic) * s.kh + ky) *
                      s.kw +
                  kx;
              layer.gw[wi] += go * x.at(0, ic, iy, ix);
              gx.at(0, ic, iy, ix) += layer.weights[wi] * go;
            }
          }
        }
      }
    }
    layer.gb[oc] += gbias;
  }
  return gx;
}

Tensor4 prelu_fwd(const Layer& layer, const Tensor4& x) {
  Tensor4 y = x;
  const size_t plane = static_cast<size_t>(x.h) * x.w;
  for (int c = 0; c < x.c; ++c) {
    const double a = layer.weights[c];
    double* p = y.v.data() + static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i) {
      if (p[i] < 0) p[i] *= a;
    }
  }
  return y;
}

Tensor4 prelu_bwd(Layer& layer, const Tensor4& gy, const Tensor4& x) {
  Tensor4 gx = gy;
  const size_t plane = static_cast<size_t>(x.h) * x.w;
  for (int c = 0; c < x.c; ++c) {
    const double a = layer.weights[c];
    const double* xv = x.v.data() + static_cast<size_t>(c) * plane;
    const double* gv = gy.v.data() + static_cast<size_t>(c) * plane;
    double* out = gx.v.data() + static_cast<size_t>(c) * plane;
    double ga = 0;
    for (size_t i = 0; i < plane; ++i) {
      if (xv[i] < 0) {
        ga += gv[i] * xv[i];
        out[i] = gv[i] * a;
      }
    }
    layer.gw[c] += ga;
  }
  return gx;
}

Tensor4 run_stack(const std::vector<Layer>& layers, Tensor4 x, Mode mode,
                  std::vector<LayerCache>* caches, std::mt19937_64* rng) {
  if (caches) caches->resize(layers.size());
  for (size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (caches) (*caches)[i].input = x;
    switch (layer.spec.kind) {
      case LayerKind::Conv:
        x = conv_fwd(layer, x);
        break;
      case LayerKind::PRelu:
        x = prelu_fwd(layer, x);
        break;
      case LayerKind::Dropout: {
        if (mode == Mode::Eval) break;  // inverted dropout: eval is identity
        require(rng != nullptr, ErrorCode::NoForwardState,
                "train-mode forward needs an RNG for dropout");
        const double keep = 1.0 - layer.spec.p;
        std::bernoulli_distribution bern(keep);
        std::vector<double> mask(x.size());
        for (size_t j = 0; j < x.size(); ++j) {
          mask[j] = bern(*rng) ? 1.0 / keep : 0.0;
          x.v[j] *= mask[j];
        }
        if (caches) (*caches)[i].mask = std::move(mask);
        break;
      }
    }
  }
  return x;
}

Tensor4 back_stack(std::vector<Layer>& layers, Tensor4 gy,
                   const std::vector<LayerCache>& caches) {
  for (size_t i = layers.size(); i-- > 0;) {
    Layer& layer = layers[i];
    const LayerCache& cache = caches[i];
    switch (layer.spec.kind) {
      case LayerKind::Conv:
        gy = conv_bwd(layer, gy, cache.input);
        break;
      case LayerKind::PRelu:
        gy = prelu_bwd(layer, gy, cache.input);
        break;
      case LayerKind::Dropout:
        for (size_t j = 0; j < gy.size(); ++j) gy.v[j] *= cache.mask[j];
        break;
    }
  }
  return gy;
}

Tensor4 image_to_tensor(const GrayImage& img) {
  Tensor4 t(1, 1, img.h, img.w);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    t.v[i] = img.pixels[i] / 255.0;  // normalize to [0,1]
  }
  return t;
}

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void NetworkConfig::validate() const {
  require(in_h >= 1 && in_w >= 1 && in_c >= 1, ErrorCode::ShapeMismatch,
          "bad input shape");
  int n_dropout = 0;
  for (const auto& group : {branch, trunk}) {
    for (const LayerSpec& s : group) {
      if (s.kind == LayerKind::Conv) {
        require(s.out_c >= 1 && s.kh >= 1 && s.kw >= 1 && s.stride >= 1,
                ErrorCode::ShapeMismatch, "bad conv spec");
      } else if (s.kind == LayerKind::Dropout) {
        require(s.p > 0 && s.p < 1, ErrorCode::OutOfRange,
                "dropout probability must be in (0,1)");
        ++n_dropout;
      }
    }
  }
  require(n_dropout == 2, ErrorCode::ShapeMismatch,
          "exactly two dropout layers required");

  // the two dropout layers sit immediately before the last two convolutions
  std::vector<size_t> conv_pos;
  for (size_t i = 0; i < trunk.size(); ++i) {
    if (trunk[i].kind == LayerKind::Conv) conv_pos.push_back(i);
  }
  require(conv_pos.size() >= 2, ErrorCode::ShapeMismatch,
          "trunk needs at least two convolutions");
  for (size_t pi : {conv_pos[conv_pos.size() - 1], conv_pos[conv_pos.size() - 2]}) {
    require(pi >= 1 && trunk[pi - 1].kind == LayerKind::Dropout,
            ErrorCode::ShapeMismatch,
            "dropout must precede each of the last two layers");
  }

  const Shape3 b = propagate(branch, {in_c, in_h, in_w});
  const Shape3 out = propagate(trunk, {2 * b.c, b.h, b.w});
  require(out.c == 6 && out.h == 1 && out.w == 1, ErrorCode::ShapeMismatch,
          "trunk must reduce to 1x1x6");
}

NetworkConfig NetworkConfig::fullres_default() {
  NetworkConfig cfg;
  cfg.in_h = 240;
  cfg.in_w = 320;
  cfg.in_c = 1;
  cfg.branch = {
      LayerSpec::conv(16, 11, 11, 4, PadMode::Same), LayerSpec::prelu(),
      LayerSpec::conv(32, 7, 7, 2, PadMode::Same),   LayerSpec::prelu(),
      LayerSpec::conv(32, 5, 5, 2, PadMode::Same),   LayerSpec::prelu(),
  };
  // 15x20 after the branch; three 3x3 stride-2 stages down to 2x3, then the
  // 2x2 / 1x2 reducers (no non-linearity on the last three convolutions)
  cfg.trunk = {
      LayerSpec::conv(64, 3, 3, 2, PadMode::Same), LayerSpec::prelu(),
      LayerSpec::conv(64, 3, 3, 2, PadMode::Same), LayerSpec::prelu(),
      LayerSpec::conv(64, 3, 3, 2, PadMode::Same),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(64, 2, 2, 1, PadMode::Valid),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(6, 1, 2, 1, PadMode::Valid),
  };
  return cfg;
}

NetworkConfig NetworkConfig::desk_default() {
  NetworkConfig cfg;
  cfg.in_h = 48;
  cfg.in_w = 64;
  cfg.in_c = 1;
  cfg.branch = {
      LayerSpec::conv(8, 5, 5, 2, PadMode::Same),  LayerSpec::prelu(),
      LayerSpec::conv(16, 3, 3, 2, PadMode::Same), LayerSpec::prelu(),
  };
  cfg.trunk = {
      LayerSpec::conv(32, 3, 3, 2, PadMode::Same), LayerSpec::prelu(),
      LayerSpec::conv(32, 3, 3, 2, PadMode::Same), LayerSpec::prelu(),
      LayerSpec::conv(32, 3, 3, 2, PadMode::Same),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(32, 2, 2, 1, PadMode::Valid),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(6, 1, 1, 1, PadMode::Valid),
  };
  return cfg;
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::OutOfRange, "batch size must be >= 1");
  require(lr0 > 0 && beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 &&
              eps > 0,
          ErrorCode::OutOfRange, "bad optimizer hyper-parameters");
  require(max_epochs >= 1 && patience >= 1, ErrorCode::OutOfRange,
          "epochs and patience must be >= 1");
}

Network::Network(const NetworkConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(init_seed);
  Shape3 shape{cfg.in_c, cfg.in_h, cfg.in_w};

  auto build = [&](const std::vector<LayerSpec>& specs, Shape3 in,
                   bool zero_last_conv) {
    std::vector<Layer> layers;
    int last_conv = -1;
    for (size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].kind == LayerKind::Conv) last_conv = static_cast<int>(i);
    }
    for (size_t i = 0; i < specs.size(); ++i) {
      Layer layer;
      layer.spec = specs[i];
      layer.in_c = in.c;
      if (layer.spec.kind == LayerKind::Conv) {
        const size_t nw = static_cast<size_t>(layer.spec.out_c) * in.c *
                          layer.spec.kh * layer.spec.kw;
        layer.weights.assign(nw, 0.0);
        layer.bias.assign(layer.spec.out_c, 0.0);
        if (!(zero_last_conv && static_cast<int>(i) == last_conv)) {
          const double fan_in =
              static_cast<double>(in.c) * layer.spec.kh * layer.spec.kw;
          const double bound = std::sqrt(1.0 / fan_in);
          std::uniform_real_distribution<double> u(-bound, bound);
          for (double& w : layer.weights) w = u(rng);
        }
      } else if (layer.spec.kind == LayerKind::PRelu) {
        layer.weights.assign(in.c, 0.25);
      }
      layer.gw.assign(layer.weights.size(), 0.0);
      layer.gb.assign(layer.bias.size(), 0.0);
      in = layer_out_shape(layer.spec, in);
      layers.push_back(std::move(layer));
    }
    return layers;
  };

  branch_ = build(cfg.branch, shape, false);
  const Shape3 b = propagate(cfg.branch, shape);
  trunk_ = build(cfg.trunk, {2 * b.c, b.h, b.w}, true);
}

size_t Network::param_count() const {
  size_t n = 0;
  for (const auto* group : {&branch_, &trunk_}) {
    for (const Layer& l : *group) n += l.weights.size() + l.bias.size();
  }
  return n;
}

std::vector<double> Network::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto* group : {&branch_, &trunk_}) {
    for (const Layer& l : *group) {
      out.insert(out.end(), l.weights.begin(), l.weights.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
  }
  return out;
}

void Network::set_flat_params(const std::vector<double>& p) {
  require(p.size() == param_count(), ErrorCode::ShapeMismatch,
          "parameter vector size mismatch");
  size_t i = 0;
  for (auto* group : {&branch_, &trunk_}) {
    for (Layer& l : *group) {
      std::copy_n(p.begin() + i, l.weights.size(), l.weights.begin());
      i += l.weights.size();
      std::copy_n(p.begin() + i, l.bias.size(), l.bias.begin());
      i += l.bias.size();
    }
  }
}

std::vector<double> Network::flat_grads() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto* group : {&branch_, &trunk_}) {
    for (const Layer& l : *group) {
      out.insert(out.end(), l.gw.begin(), l.gw.end());
      out.insert(out.end(), l.gb.begin(), l.gb.end());
    }
  }
  return out;
}

void Network::zero_grads() {
  for (auto* group : {&branch_, &trunk_}) {
    for (Layer& l : *group) {
      std::fill(l.gw.begin(), l.gw.end(), 0.0);
      std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
  }
}

void Network::scale_grads(double s) {
  for (auto* group : {&branch_, &trunk_}) {
    for (Layer& l : *group) {
      for (double& g : l.gw) g *= s;
      for (double& g : l.gb) g *= s;
    }
  }
}

Pose6 forward(const Network& net, const GrayImage& keyframe,
              const GrayImage& liveframe, Mode mode, ForwardState* state,
              std::mt19937_64* rng) {
  const NetworkConfig& cfg = net.config();
  require(keyframe.w == cfg.in_w && keyframe.h == cfg.in_h &&
              liveframe.w == cfg.in_w && liveframe.h == cfg.in_h,
          ErrorCode::DimensionMismatch, "input images do not match network");
  require(mode == Mode::Eval || (state != nullptr && rng != nullptr),
          ErrorCode::NoForwardState,
          "train-mode forward requires a state and RNG");

  const std::vector<Layer>& branch = net.branch();
  const std::vector<Layer>& trunk = net.trunk();

  std::vector<LayerCache>* ck = state ? &state->key_caches : nullptr;
  std::vector<LayerCache>* cl = state ? &state->live_caches : nullptr;
  std::vector<LayerCache>* ct = state ? &state->trunk_caches : nullptr;

  const Tensor4 bk =
      run_stack(branch, image_to_tensor(keyframe), mode, ck, rng);
  const Tensor4 bl =
      run_stack(branch, image_to_tensor(liveframe), mode, cl, rng);

  // fuse by channel concatenation, keyframe first
  Tensor4 fused(1, bk.c + bl.c, bk.h, bk.w);
  std::copy(bk.v.begin(), bk.v.end(), fused.v.begin());
  std::copy(bl.v.begin(), bl.v.end(), fused.v.begin() + bk.v.size());

  const Tensor4 out = run_stack(trunk, std::move(fused), mode, ct, rng);
  require(out.c == 6 && out.h == 1 && out.w == 1, ErrorCode::ShapeMismatch,
          "network output is not 1x1x6");
  if (state) {
    state->valid = true;
    state->train = (mode == Mode::Train);
  }
  return Pose6(out.v[0], out.v[1], out.v[2], out.v[3], out.v[4], out.v[5]);
}

void backward(Network& net, const Eigen::Matrix<double, 6, 1>& grad_wrt_delta,
              const ForwardState& state) {
  require(state.valid && state.train, ErrorCode::NoForwardState,
          "backward requires a prior train-mode forward");
  Tensor4 gy(1, 6, 1, 1);
  for (int i = 0; i < 6; ++i) gy.v[i] = grad_wrt_delta[i];

  const Tensor4 gfused = back_stack(net.trunk(), std::move(gy), state.trunk_caches);
  const int cb = gfused.c / 2;
  Tensor4 gk(1, cb, gfused.h, gfused.w), gl(1, cb, gfused.h, gfused.w);
  std::copy_n(gfused.v.begin(), gk.v.size(), gk.v.begin());
  std::copy_n(gfused.v.begin() + gk.v.size(), gl.v.size(), gl.v.begin());

  // both branches accumulate into the shared weights
  back_stack(net.branch(), std::move(gk), state.key_caches);
  back_stack(net.branch(), std::move(gl), state.live_caches);
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& m, std::vector<double>& v, long t,
               int epoch, const TrainConfig& cfg) {
  cfg.validate();
  require(params.size() == grads.size(), ErrorCode::ShapeMismatch,
          "params/grads size mismatch");
  require(t >= 1, ErrorCode::OutOfRange, "adam step index must be >= 1");
  if (m.empty()) m.assign(params.size(), 0.0);
  if (v.empty()) v.assign(params.size(), 0.0);
  require(m.size() == params.size() && v.size() == params.size(),
          ErrorCode::ShapeMismatch, "moment buffer size mismatch");

  const double lr = cfg.lr0 / std::pow(2.0, epoch);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

double positioning_error(const Pose6& delta_pred, const Pose6& delta_gt,
                         const Transform& key_pose) {
  const Transform pred = se3_compose(key_pose, se3_exp(delta_pred));
  const Transform gt = se3_compose(key_pose, se3_exp(delta_gt));
  return (pred.translation() - gt.translation()).norm();
}

namespace {

double mean_positioning_error(const Network& net,
                              const std::vector<TrainSample>& samples) {
  double sum = 0;
  for (const TrainSample& s : samples) {
    const Pose6 pred = forward(net, s.key, s.live, Mode::Eval);
    sum += positioning_error(pred, s.delta_gt, s.key_pose);
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

TrainResult train_loop(Network& net, const std::vector<TrainSample>& train,
                       const std::vector<TrainSample>& valid,
                       const TrainConfig& cfg) {
  cfg.validate();
  require(!train.empty() && !valid.empty(), ErrorCode::EmptyDataset,
          "training and validation sets must be non-empty");
  for (const TrainSample& s : train) {
    require(s.depth.w >= 1, ErrorCode::EmptyDataset,
            "training pair lacks a depth map");
  }

  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<double> params = net.flat_params();
  std::vector<double> m, v;
  long t = 0;
  long iteration = 0;

  TrainResult result;
  double valid_err = mean_positioning_error(net, valid);
  result.best_valid_err = valid_err;
  result.best_epoch = -1;
  std::vector<double> best_params = params;
  int epochs_since_best = 0;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const int count = static_cast<int>(end - start);
      net.zero_grads();
      double batch_loss = 0, batch_err = 0;
      for (size_t bi = start; bi < end; ++bi) {
        const TrainSample& s = train[order[bi]];
        ForwardState state;
        const Pose6 pred = forward(net, s.key, s.live, Mode::Train, &state, &rng);
        batch_loss += projection_loss(pred, s.delta_gt, s.depth, s.k);
        batch_err += positioning_error(pred, s.delta_gt, s.key_pose);
        const auto grad6 = projection_loss_grad(pred, s.delta_gt, s.depth, s.k,
                                                DegeneratePolicy::Skip);
        backward(net, grad6, state);
      }
      net.scale_grads(1.0 / count);
      const std::vector<double> grads = net.flat_grads();
      ++t;
      adam_step(params, grads, m, v, t, epoch, cfg);
      net.set_flat_params(params);

      ++iteration;
      result.history.push_back({iteration, batch_loss / count,
                                batch_err / count, valid_err});
    }

    valid_err = mean_positioning_error(net, valid);
    if (!result.history.empty()) result.history.back().valid_err_m = valid_err;
    result.epochs_run = epoch + 1;
    // the untrained parameters are a restore candidate too (best_epoch -1)
    if (valid_err < result.best_valid_err) {
      result.best_valid_err = valid_err;
      result.best_epoch = epoch;
      best_params = params;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;  // early stopping
    }
  }

  net.set_flat_params(best_params);
  return result;
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  write_pod(f, kMagic);
  write_pod(f, kVersion);
  const NetworkConfig& cfg = net.config();
  write_pod(f, cfg.in_h);
  write_pod(f, cfg.in_w);
  write_pod(f, cfg.in_c);
  auto write_specs = [&f](const std::vector<LayerSpec>& specs) {
    const uint32_t n = static_cast<uint32_t>(specs.size());
    write_pod(f, n);
    for (const LayerSpec& s : specs) {
      write_pod(f, static_cast<int32_t>(s.kind));
      write_pod(f, s.out_c);
      write_pod(f, s.kh);
      write_pod(f, s.kw);
      write_pod(f, s.stride);
      write_pod(f, static_cast<int32_t>(s.pad));
      write_pod(f, s.p);
    }
  };
  write_specs(cfg.branch);
  write_specs(cfg.trunk);

  const std::vector<double> params = net.flat_params();
  const uint64_t n = params.size();
  write_pod(f, n);
  for (const double p : params) {
    write_pod(f, static_cast<float>(p));
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

Network load_network(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  uint32_t magic = 0, version = 0;
  read_pod(f, magic);
  read_pod(f, version);
  require(magic == kMagic, ErrorCode::DataError, "not a network file: " + path);
  require(version == kVersion, ErrorCode::DataError,
          "unsupported network version");
  NetworkConfig cfg;
  read_pod(f, cfg.in_h);
  read_pod(f, cfg.in_w);
  read_pod(f, cfg.in_c);
  auto read_specs = [&f]() {
    uint32_t n = 0;
    read_pod(f, n);
    std::vector<LayerSpec> specs(n);
    for (LayerSpec& s : specs) {
      int32_t kind = 0, pad = 0;
      read_pod(f, kind);
      read_pod(f, s.out_c);
      read_pod(f, s.kh);
      read_pod(f, s.kw);
      read_pod(f, s.stride);
      read_pod(f, pad);
      read_pod(f, s.p);
      s.kind = static_cast<LayerKind>(kind);
      s.pad = static_cast<PadMode>(pad);
    }
    return specs;
  };
  cfg.branch = read_specs();
  cfg.trunk = read_specs();

  Network net(cfg, 0);
  uint64_t n = 0;
  read_pod(f, n);
  require(n == net.param_count(), ErrorCode::DataError,
          "parameter count mismatch in " + path);
  std::vector<double> params(n);
  for (uint64_t i = 0; i < n; ++i) {
    float p = 0;
    read_pod(f, p);
    params[i] = p;
  }
  require(f.good(), ErrorCode::IoError, "truncated network file: " + path);
  net.set_flat_params(params);
  return net;
}

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& history) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "iteration,loss_m,train_err_m,valid_err_m\n";
  char buf[256];
  for (const HistoryRow& r : history) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9e,%.9e,%.9e\n", r.iteration,
                  r.loss_m, r.train_err_m, r.valid_err_m);
    f << buf;
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

std::vector<HistoryRow> read_history_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "iteration,loss_m,train_err_m,valid_err_m",
          ErrorCode::DataError, "bad history header in " + path);
  std::vector<HistoryRow> rows;
  while (std::getline(f, line)) {
    HistoryRow r;
    require(std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf", &r.iteration,
                        &r.loss_m, &r.train_err_m, &r.valid_err_m) == 4,
            ErrorCode::DataError, "bad history row in " + path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace vgloc::net
