// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal trainable Siamese fully-convolutional regressor. Two weight-shared
// branches consume the keyframe and live frame, fuse by channel
// concatenation, and a convolutional trunk reduces to a 1x1x6 relative-pose
// vector. Trained with Adam under the 3D projection loss from geom3d.

#ifndef VGLOC_TINYNET_HPP
#define VGLOC_TINYNET_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vgloc/geom3d.hpp"
#include "vgloc/image.hpp"

namespace vgloc::net {

struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

  size_t size() const { return v.size(); }
  double& at(int ni, int ci, int yi, int xi) {
    return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
  }
  double at(int ni, int ci, int yi, int xi) const {
    return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
  }
};

enum class LayerKind { Conv, PRelu, Dropout };
enum class PadMode { Same, Valid };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int out_c = 0, kh = 0, kw = 0, stride = 1;  // conv
  PadMode pad = PadMode::Valid;
  double p = 0.5;  // dropout probability

  static LayerSpec conv(int out_c, int kh, int kw, int stride,
                        PadMode pad = PadMode::Valid) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.out_c = out_c;
    s.kh = kh;
    s.kw = kw;
    s.stride = stride;
    s.pad = pad;
    return s;
  }
  static LayerSpec prelu() {
    LayerSpec s;
    s.kind = LayerKind::PRelu;
    return s;
  }
  static LayerSpec dropout(double p) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.p = p;
    return s;
  }
};

struct Shape3 {
  int c = 0, h = 0, w = 0;
};

struct NetworkConfig {
  int in_h = 240, in_w = 320, in_c = 1;
  std::vector<LayerSpec> branch;  // weights shared across the two branches
  std::vector<LayerSpec> trunk;   // applied after channel concatenation

  /// Checks layer structure and that the trunk reduces to 1x1x6 with the
  /// two dropout layers sitting right before the last two convolutions.
  void validate() const;

  /// Full-resolution 320x240 configuration: 3x3 trunk convolutions with
  /// larger-receptive-field early layers, no pooling, 2x2 / 2x1 reducers
  /// at the end.
  static NetworkConfig fullres_default();

  /// Small configuration for synthetic desk-scale experiments (64x48 input).
  static NetworkConfig desk_default();
};

struct TrainConfig {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr0 = 1e-4;     // halved at each epoch
  int batch_size = 24;
  int max_epochs = 10;
  int patience = 3;      // early-stopping epochs without validation improvement
  uint64_t rng_seed = 0;

  void validate() const;
};

struct Layer {
  LayerSpec spec;
  int in_c = 0;                 // resolved input channels
  std::vector<double> weights;  // conv kernel / prelu per-channel slopes
  std::vector<double> bias;     // conv only
  std::vector<double> gw, gb;
};

struct LayerCache {
  Tensor4 input;
  std::vector<double> mask;  // dropout keep mask (already scaled)
};

struct ForwardState {
  bool valid = false;
  bool train = false;
  std::vector<LayerCache> key_caches, live_caches, trunk_caches;
};

class Network {
 public:
  Network() = default;
  Network(const NetworkConfig& cfg, uint64_t init_seed);

  const NetworkConfig& config() const { return cfg_; }
  std::vector<Layer>& branch() { return branch_; }
  std::vector<Layer>& trunk() { return trunk_; }
  const std::vector<Layer>& branch() const { return branch_; }
  const std::vector<Layer>& trunk() const { return trunk_; }

  size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& p);
  std::vector<double> flat_grads() const;
  void zero_grads();
  void scale_grads(double s);

 private:
  NetworkConfig cfg_;
  std::vector<Layer> branch_, trunk_;
};

enum class Mode { Train, Eval };

/// Run the Siamese forward pass. In Train mode a ForwardState and RNG must
/// be supplied (dropout masks are drawn and activations recorded for
/// backward); Eval mode is deterministic (inverted dropout = identity).
Pose6 forward(const Network& net, const GrayImage& keyframe,
              const GrayImage& liveframe, Mode mode,
              ForwardState* state = nullptr, std::mt19937_64* rng = nullptr);

/// Backpropagate d(loss)/d(delta_pred) through the recorded forward pass,
/// accumulating parameter gradients (shared branch weights accumulate from
/// both branches).
void backward(Network& net, const Eigen::Matrix<double, 6, 1>& grad_wrt_delta,
              const ForwardState& state);

/// One Adam update with bias correction; learning rate = lr0 / 2^epoch.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& m, std::vector<double>& v, long t,
               int epoch, const TrainConfig& cfg);

/// A fully-loaded training pair at network input resolution.
struct TrainSample {
  GrayImage key, live;
  DepthMap depth;        // live depth
  CameraIntrinsics k;    // intrinsics matching the resized depth
  Pose6 delta_gt;
  Transform key_pose;
};

struct HistoryRow {
  long iteration = 0;
  double loss_m = 0, train_err_m = 0, valid_err_m = 0;
};

struct TrainResult {
  std::vector<HistoryRow> history;
  double best_valid_err = 0;
  int best_epoch = -1;
  int epochs_run = 0;
};

/// Mini-batch Adam training under the projection loss, with per-epoch
/// validation positioning error and early stopping; the network is left at
/// the parameters with minimum validation error.
TrainResult train_loop(Network& net, const std::vector<TrainSample>& train,
                       const std::vector<TrainSample>& valid,
                       const TrainConfig& cfg);

/// Euclidean distance between camera positions implied by the two relative
/// poses composed onto the same key pose.
double positioning_error(const Pose6& delta_pred, const Pose6& delta_gt,
                         const Transform& key_pose);

void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

/// Training history CSV: iteration,loss_m,train_err_m,valid_err_m.
void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& history);
std::vector<HistoryRow> read_history_csv(const std::string& path);

}  // namespace vgloc::net

#endif  // VGLOC_TINYNET_HPP
