// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vgloc/datapipe.hpp"
#include "vgloc/error.hpp"
#include "vgloc/evalharness.hpp"
#include "vgloc/geom3d.hpp"
#include "vgloc/globaloc.hpp"
#include "vgloc/image.hpp"
#include "vgloc/tinynet.hpp"
#include "vgloc/wnn.hpp"

using namespace vgloc;
namespace fs = std::filesystem;

namespace {

std::mt19937_64 rng(987654321);

double urand(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

Pose6 random_twist(double max_angle, double max_trans) {
  Eigen::Vector3d axis(urand(-1, 1), urand(-1, 1), urand(-1, 1));
  while (axis.norm() < 1e-3) axis = {urand(-1, 1), urand(-1, 1), urand(-1, 1)};
  axis.normalize();
  return Pose6(axis * urand(0, max_angle),
               Eigen::Vector3d(urand(-max_trans, max_trans),
                               urand(-max_trans, max_trans),
                               urand(-max_trans, max_trans)));
}

DepthMap random_depth(int w, int h, double lo, double hi) {
  DepthMap d(w, h);
  for (auto& v : d.values) v = static_cast<float>(urand(lo, hi));
  return d;
}

GrayImage random_image(int w, int h, uint64_t seed) {
  std::mt19937_64 r(seed);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(d(r));
  return img;
}

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vgloc_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Brute-force projection-loss oracle: plain scalar loops, no shared helpers.
double loss_oracle(const Pose6& dp, const Pose6& dg, const DepthMap& depth,
                   const CameraIntrinsics& k) {
  const Transform tp = se3_exp(dp);
  const Transform tg = se3_exp(dg);
  double sum = 0;
  int n = 0;
  for (int v = 0; v < depth.h; ++v) {
    for (int u = 0; u < depth.w; ++u) {
      const float d = depth.at(u, v);
      if (!DepthMap::valid_depth(d)) continue;
      const double x = (u - k.cx) / k.fx * d;
      const double y = (v - k.cy) / k.fy * d;
      Eigen::Vector4d p(x, y, d, 1.0);
      sum += ((tp.m * p).head<3>() - (tg.m * p).head<3>()).norm();
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

// --- 1: geometry suite -------------------------------------------------------

Verdict criterion_geometry() {
  double worst_law = 0;
  for (int i = 0; i < 1000; ++i) {
    const Transform a = se3_exp(random_twist(3.0, 5.0));
    const Transform b = se3_exp(random_twist(3.0, 5.0));
    const Transform c = se3_exp(random_twist(3.0, 5.0));
    const Eigen::Matrix4d ident =
        se3_compose(a, se3_inverse(a)).m - Eigen::Matrix4d::Identity();
    const Eigen::Matrix4d assoc =
        se3_compose(se3_compose(a, b), c).m - se3_compose(a, se3_compose(b, c)).m;
    worst_law = std::max({worst_law, ident.cwiseAbs().maxCoeff(),
                          assoc.cwiseAbs().maxCoeff()});
    const Pose6 t = random_twist(3.0, 5.0);
    const Pose6 back = se3_log(se3_exp(t));
    worst_law = std::max(worst_law, (back.vector() - t.vector()).cwiseAbs().maxCoeff());
  }

  double worst_loss = 0;
  for (int i = 0; i < 100; ++i) {
    const DepthMap depth = random_depth(6, 5, 0.5, 10.0);
    const CameraIntrinsics k{urand(20, 60), urand(20, 60), 3.0, 2.5};
    const Pose6 dp = random_twist(0.5, 1.0);
    const Pose6 dg = random_twist(0.5, 1.0);
    worst_loss = std::max(worst_loss, std::abs(projection_loss(dp, dg, depth, k) -
                                               loss_oracle(dp, dg, depth, k)));
  }

  Verdict v;
  v.pass = worst_law < 1e-9 && worst_loss < 1e-9;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "group-law residual %.2e (<1e-9), loss-oracle diff %.2e (<1e-9)",
                worst_law, worst_loss);
  v.detail = buf;
  return v;
}

// --- 2: gradient suite -------------------------------------------------------

net::NetworkConfig tiny_cfg() {
  net::NetworkConfig cfg;
  cfg.in_h = 16;
  cfg.in_w = 16;
  cfg.in_c = 1;
  using LS = net::LayerSpec;
  cfg.branch = {LS::conv(4, 3, 3, 2, net::PadMode::Same), LS::prelu()};
  cfg.trunk = {LS::conv(8, 3, 3, 2, net::PadMode::Same), LS::prelu(),
               LS::conv(8, 3, 3, 2, net::PadMode::Same),
               LS::dropout(0.5),
               LS::conv(8, 2, 2, 1, net::PadMode::Valid),
               LS::dropout(0.5),
               LS::conv(6, 1, 1, 1, net::PadMode::Valid)};
  return cfg;
}

Verdict criterion_gradients() {
  // projection_loss_grad vs central differences, rel err < 1e-4
  double worst_loss_rel = 0;
  for (int i = 0; i < 100; ++i) {
    const DepthMap depth = random_depth(4, 4, 0.5, 8.0);
    const CameraIntrinsics k{30.0, 28.0, 2.0, 2.0};
    const Pose6 dp = random_twist(0.4, 0.8);
    const Pose6 dg = random_twist(0.4, 0.8);
    const Eigen::Matrix<double, 6, 1> g =
        projection_loss_grad(dp, dg, depth, k, DegeneratePolicy::Skip);
    for (int j = 0; j < 6; ++j) {
      const double h = 1e-5;
      Pose6 p = dp, m = dp;
      (j < 3 ? p.rot[j] : p.trans[j - 3]) += h;
      (j < 3 ? m.rot[j] : m.trans[j - 3]) -= h;
      const double fd = (projection_loss(p, dg, depth, k) -
                         projection_loss(m, dg, depth, k)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[j]), 1e-6});
      worst_loss_rel = std::max(worst_loss_rel, std::abs(fd - g[j]) / denom);
    }
  }

  // every layer kind through the tiny net, stratified per parameter block
  double worst_layer_rel = 0;
  int instances = 0;
  for (uint64_t seed : {21u, 22u, 23u}) {
    net::Network netw(tiny_cfg(), seed);
    {
      std::mt19937_64 pr(seed * 977 + 13);
      std::uniform_real_distribution<double> u(-0.2, 0.2);
      std::vector<double> p = netw.flat_params();
      for (double& x : p) x = u(pr);
      netw.set_flat_params(p);
    }
    const GrayImage a = random_image(16, 16, seed * 3);
    const GrayImage b = random_image(16, 16, seed * 3 + 1);
    std::mt19937_64 grng(seed);
    std::uniform_real_distribution<double> ug(-1.0, 1.0);
    Eigen::Matrix<double, 6, 1> g;
    for (int i = 0; i < 6; ++i) g[i] = ug(grng);
    const uint64_t drop_seed = seed * 5 + 1;
    auto eval_J = [&](const std::vector<double>& p) {
      net::Network n2(tiny_cfg(), seed);
      n2.set_flat_params(p);
      net::ForwardState st;
      std::mt19937_64 dr(drop_seed);
      const Pose6 d = net::forward(n2, a, b, net::Mode::Train, &st, &dr);
      return g.dot(d.vector());
    };
    net::ForwardState st;
    std::mt19937_64 dr(drop_seed);
    net::forward(netw, a, b, net::Mode::Train, &st, &dr);
    netw.zero_grads();
    net::backward(netw, g, st);
    const std::vector<double> analytic = netw.flat_grads();
    const std::vector<double> params = netw.flat_params();

    std::vector<size_t> block_off;
    size_t off = 0;
    for (const auto* grp : {&netw.branch(), &netw.trunk()}) {
      for (const net::Layer& L : *grp) {
        if (!L.weights.empty()) block_off.push_back(off);
        off += L.weights.size();
        if (!L.bias.empty()) block_off.push_back(off);
        off += L.bias.size();
      }
    }
    block_off.push_back(off);
    std::mt19937_64 pick(seed * 7);
    for (size_t bi = 0; bi + 1 < block_off.size(); ++bi) {
      if (block_off[bi + 1] == block_off[bi]) continue;
      std::uniform_int_distribution<size_t> di(block_off[bi],
                                               block_off[bi + 1] - 1);
      for (int rep = 0; rep < 4; ++rep) {
        const size_t i = di(pick);
        const double h = 1e-4;
        std::vector<double> p = params;
        p[i] = params[i] + h;
        const double jp = eval_J(p);
        p[i] = params[i] - h;
        const double jm = eval_J(p);
        const double fd = (jp - jm) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        worst_layer_rel = std::max(worst_layer_rel,
                                   std::abs(fd - analytic[i]) / denom);
        ++instances;
      }
    }
  }

  Verdict v;
  v.pass = worst_loss_rel < 1e-4 && worst_layer_rel < 1e-3 && instances >= 100;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "loss grad rel %.2e (<1e-4), layer grads rel %.2e (<1e-3), "
                "%d layer instances",
                worst_loss_rel, worst_layer_rel, instances);
  v.detail = buf;
  return v;
}

// --- 3: depth-scaling property -------------------------------------------------

Verdict criterion_depth_scaling() {
  double worst_rot_ratio = 0, worst_trans_diff = 0;
  for (int i = 0; i < 50; ++i) {
    DepthMap d1 = random_depth(5, 4, 1.0, 6.0);
    DepthMap d2 = d1;
    for (auto& z : d2.values) z *= 2.f;
    const CameraIntrinsics k{25.0, 25.0, 2.5, 2.0};

    const Pose6 rot_mismatch(urand(-0.2, 0.2), urand(-0.2, 0.2),
                             urand(-0.2, 0.2), 0, 0, 0);
    const auto g1 = projection_loss_grad(rot_mismatch, Pose6(), d1, k);
    const auto g2 = projection_loss_grad(rot_mismatch, Pose6(), d2, k);
    const double ratio = g2.head<3>().norm() / g1.head<3>().norm();
    worst_rot_ratio = std::max(worst_rot_ratio, std::abs(ratio - 2.0));

    const Pose6 trans_mismatch(0, 0, 0, urand(-0.5, 0.5), urand(-0.5, 0.5),
                               urand(-0.5, 0.5));
    const auto h1 = projection_loss_grad(trans_mismatch, Pose6(), d1, k);
    const auto h2 = projection_loss_grad(trans_mismatch, Pose6(), d2, k);
    worst_trans_diff = std::max(
        worst_trans_diff, (h2.tail<3>() - h1.tail<3>()).cwiseAbs().maxCoeff());
  }
  Verdict v;
  v.pass = worst_rot_ratio < 1e-6 && worst_trans_diff < 1e-9;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rotation ratio within %.2e of 2.0 (<1e-6), translation drift "
                "%.2e (<1e-9)",
                worst_rot_ratio, worst_trans_diff);
  v.detail = buf;
  return v;
}

// --- 4: WNN exact recall -------------------------------------------------------

Verdict criterion_exact_recall() {
  const std::string dir = scratch_dir("recall200");
  data::SynthConfig scfg;
  scfg.seed = 1;
  scfg.n_frames = 200;
  scfg.lap_length = 400.0;  // 2 m spacing: 200 distinct views
  scfg.img_w = 64;
  scfg.img_h = 48;
  scfg.k = {40.0, 40.0, 32.0, 24.0};
  scfg.n_boxes = 40;
  const data::LapSequence lap = data::synth_lap(scfg, "keys", dir);

  wnn::WnnState state;
  state.cfg.neurons_x = 24;
  state.cfg.neurons_y = 16;
  state.cfg.synapses = 128;
  state.cfg.rng_seed = 1;
  std::vector<GrayImage> images;
  for (size_t i = 0; i < lap.frames.size(); ++i) {
    images.push_back(read_image(lap.frames[i].image_key));
    wnn::wnn_train(state, images.back(),
                   {static_cast<int32_t>(i), lap.frames[i].image_key,
                    lap.frames[i].pose});
  }
  const wnn::HammingIndex idx = wnn::build_hamming_index(state, 3);
  int correct = 0;
  double min_vote = 1.0;
  for (size_t i = 0; i < images.size(); ++i) {
    const wnn::CommitteeResult r = wnn::committee_recall(state, images[i], &idx);
    if (r.place_id == static_cast<int32_t>(i)) ++correct;
    min_vote = std::min(min_vote, r.vote_fraction);
  }
  Verdict v;
  v.pass = correct == 200 && min_vote == 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d/200 exact, min vote %.3f (=1.0 required)",
                correct, min_vote);
  v.detail = buf;
  return v;
}

// --- 5: WNN proximity recall ---------------------------------------------------

Verdict criterion_proximity_recall() {
  const std::string dir = scratch_dir("proximity");
  data::SynthConfig scfg;  // the shipped default synthetic world and seed
  scfg.seed = 1;
  scfg.n_frames = 360;
  scfg.lap_length = 180.0;
  scfg.img_w = 64;
  scfg.img_h = 48;
  scfg.k = {40.0, 40.0, 32.0, 24.0};
  scfg.n_boxes = 40;
  const data::LapSequence lap = data::synth_lap(scfg, "train", dir);
  const data::LapSequence keys = data::sample_by_spacing(lap, 5.0);
  const data::LapSequence queries = data::sample_by_spacing(lap, 1.0);

  wnn::WnnState state;
  state.cfg.neurons_x = 24;
  state.cfg.neurons_y = 16;
  state.cfg.synapses = 128;
  state.cfg.rng_seed = 1;
  for (size_t i = 0; i < keys.frames.size(); ++i) {
    wnn::wnn_train(state, read_image(keys.frames[i].image_key),
                   {static_cast<int32_t>(i), keys.frames[i].image_key,
                    keys.frames[i].pose});
  }
  const wnn::HammingIndex idx = wnn::build_hamming_index(state, 3);
  const std::vector<data::Correspondence> truth =
      data::register_laps(queries, keys);
  std::vector<int> predicted, expected;
  for (size_t i = 0; i < queries.frames.size(); ++i) {
    const wnn::CommitteeResult r =
        wnn::committee_recall(state, read_image(queries.frames[i].image_key), &idx);
    predicted.push_back(r.place_id);
    expected.push_back(static_cast<int>(truth[i].ref_index));
  }
  const eval::MaeCurve curve = eval::mae_accuracy(predicted, expected, 5);
  bool monotone = true;
  for (size_t m = 1; m < curve.accuracy.size(); ++m) {
    monotone = monotone && curve.accuracy[m] >= curve.accuracy[m - 1];
  }
  Verdict v;
  v.pass = curve.accuracy[0] >= 0.90 && curve.accuracy[1] >= 0.97 && monotone;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "MAE0 %.3f (>=0.90), MAE1 %.3f (>=0.97), curve %s",
                curve.accuracy[0], curve.accuracy[1],
                monotone ? "non-decreasing" : "NOT monotone");
  v.detail = buf;
  return v;
}

// --- 6: index soundness ----------------------------------------------------------

wnn::BitPattern random_pattern(int nbits) {
  wnn::BitPattern p = wnn::BitPattern::zeros(nbits);
  for (int b = 0; b < nbits; ++b) p.set(b, rng() & 1u);
  return p;
}

Verdict criterion_index_soundness() {
  // exhaustive: S=16, 64 stored patterns, all 65536 queries
  int exhaustive_bad = 0;
  {
    wnn::WnnState state;
    state.cfg.neurons_x = 1;
    state.cfg.neurons_y = 1;
    state.cfg.synapses = 16;
    state.cfg.rng_seed = 13;
    state.syn = wnn::build_synapses(state.cfg, 8, 8);
    state.neurons.assign(1, wnn::NeuronMemory{});
    for (int i = 0; i < 64; ++i) {
      wnn::BitPattern p = wnn::BitPattern::zeros(16);
      p.words[0] = rng() & 0xFFFFu;
      state.neurons[0].append(p, i);
    }
    const int radius = 3;
    const wnn::HammingIndex idx = wnn::build_hamming_index(state, radius);
    for (uint32_t q16 = 0; q16 < 65536; ++q16) {
      wnn::BitPattern q = wnn::BitPattern::zeros(16);
      q.words[0] = q16;
      const wnn::RecallResult lin = wnn::neuron_recall(q, state.neurons[0]);
      if (lin.distance > radius) continue;
      const wnn::RecallResult ind =
          wnn::indexed_recall(q, 0, idx, state.neurons[0]);
      if (ind.label != lin.label || ind.distance != lin.distance) ++exhaustive_bad;
    }
  }

  // statistical: S=128, 100k random queries near stored patterns
  int stat_bad = 0, stat_covered = 0;
  {
    wnn::WnnState state;
    state.cfg.neurons_x = 1;
    state.cfg.neurons_y = 1;
    state.cfg.synapses = 128;
    state.cfg.rng_seed = 17;
    state.syn = wnn::build_synapses(state.cfg, 8, 8);
    state.neurons.assign(1, wnn::NeuronMemory{});
    std::vector<wnn::BitPattern> stored;
    for (int i = 0; i < 400; ++i) {
      stored.push_back(random_pattern(128));
      state.neurons[0].append(stored.back(), i);
    }
    const int radius = 3;
    const wnn::HammingIndex idx = wnn::build_hamming_index(state, radius);
    std::uniform_int_distribution<int> flips(0, 5);
    std::uniform_int_distribution<size_t> which(0, stored.size() - 1);
    std::uniform_int_distribution<int> bit(0, 127);
    for (int i = 0; i < 100000; ++i) {
      wnn::BitPattern q = stored[which(rng)];
      const int f = flips(rng);
      for (int j = 0; j < f; ++j) q.set(bit(rng), !q.get(bit(rng)));
      const wnn::RecallResult lin = wnn::neuron_recall(q, state.neurons[0]);
      if (lin.distance > radius) continue;
      ++stat_covered;
      const wnn::RecallResult ind =
          wnn::indexed_recall(q, 0, idx, state.neurons[0]);
      if (ind.label != lin.label || ind.distance != lin.distance) ++stat_bad;
    }
  }
  Verdict v;
  v.pass = exhaustive_bad == 0 && stat_bad == 0 && stat_covered > 1000;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "exhaustive mismatches %d, statistical mismatches %d "
                "(%d in-radius queries of 100000)",
                exhaustive_bad, stat_bad, stat_covered);
  v.detail = buf;
  return v;
}

// --- 7: overfit sanity -----------------------------------------------------------

Verdict criterion_overfit() {
  net::NetworkConfig cfg_net = tiny_cfg();
  cfg_net.trunk[3].p = 0.05;
  cfg_net.trunk[5].p = 0.05;
  std::vector<net::TrainSample> train;
  for (uint64_t s = 0; s < 4; ++s) {
    std::mt19937_64 r(s + 1);
    std::uniform_real_distribution<double> ud(1.0, 5.0);
    std::uniform_real_distribution<double> ut(-0.3, 0.3);
    net::TrainSample smp;
    smp.key = random_image(16, 16, (s + 1) * 7 + 1);
    smp.live = random_image(16, 16, (s + 1) * 7 + 2);
    smp.depth = DepthMap(16, 16);
    for (auto& d : smp.depth.values) d = static_cast<float>(ud(r));
    smp.k = CameraIntrinsics{16.0, 16.0, 8.0, 8.0};
    smp.delta_gt = Pose6(ut(r) * 0.1, ut(r) * 0.1, ut(r) * 0.1, ut(r), ut(r), ut(r));
    smp.key_pose = Transform::identity();
    train.push_back(std::move(smp));
  }

  net::Network netw(cfg_net, 2);
  net::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lr0 = 1e-2;
  cfg.max_epochs = 5;
  cfg.patience = 5;
  cfg.rng_seed = 1;
  std::vector<net::TrainSample> rep;
  for (int i = 0; i < 100; ++i) {
    for (const auto& s : train) rep.push_back(s);
  }
  auto eval_loss = [&](const net::Network& n) {
    double sum = 0;
    for (const net::TrainSample& s : train) {
      sum += projection_loss(net::forward(n, s.key, s.live, net::Mode::Eval),
                             s.delta_gt, s.depth, s.k);
    }
    return sum / static_cast<double>(train.size());
  };
  const double before = eval_loss(netw);
  const net::TrainResult res = net::train_loop(netw, rep, rep, cfg);
  const double after = eval_loss(netw);

  Verdict v;
  v.pass = res.history.size() <= 500 && after < 0.1 * before;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "loss %.4f -> %.4f (ratio %.3f < 0.1) in %zu iterations",
                before, after, after / before, res.history.size());
  v.detail = buf;
  return v;
}

// --- 8 & 9: end-to-end pipeline ---------------------------------------------------

eval::Config default_pipeline_config(const std::string& out) {
  eval::Config cfg;
  cfg.kv["out"] = out;
  cfg.kv["stages"] = "synth,train-wnn,train-cnn,localize,eval";
  cfg.kv["seed"] = "1";
  return cfg;
}

Verdict criterion_end_to_end(const std::string& dir, double elapsed_s) {
  const eval::ErrorStats fix = eval::read_stats_csv(dir + "/results/stats.csv");
  const eval::ErrorStats base =
      eval::read_stats_csv(dir + "/results/stats_baseline.csv");
  const double half_spacing = 2.5;  // default keyframe spacing 5 m
  Verdict v;
  v.pass = fix.median < base.median && fix.median < half_spacing &&
           elapsed_s < 600.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "fix median %.4f m < baseline %.4f m, median under %.1f m "
                "(>=50%% of fixes), %.1f s (<600 s)",
                fix.median, base.median, half_spacing, elapsed_s);
  v.detail = buf;
  return v;
}

Verdict criterion_determinism(const std::string& dir) {
  const std::vector<std::string> artifacts{
      "results/stats.csv", "results/stats_baseline.csv", "results/mae.csv",
      "results/fixes.csv", "models/history.csv",         "models/places.csv",
  };
  std::vector<std::string> first;
  for (const std::string& a : artifacts) first.push_back(slurp(dir + "/" + a));
  eval::run_experiment(default_pipeline_config(dir));
  int mismatches = 0;
  for (size_t i = 0; i < artifacts.size(); ++i) {
    if (first[i].empty() || first[i] != slurp(dir + "/" + artifacts[i])) {
      ++mismatches;
    }
  }
  Verdict v;
  v.pass = mismatches == 0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d of %zu CSV artifacts differ across reruns",
                mismatches, artifacts.size());
  v.detail = buf;
  return v;
}

int report(int index, const char* name, const Verdict& v, double t0) {
  std::printf("[%d/9] %s  %s: %s (%.1f s)\n", index, v.pass ? "PASS" : "FAIL",
              name, v.detail.c_str(), now_seconds() - t0);
  std::fflush(stdout);
  return v.pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  double t0;

  t0 = now_seconds();
  failures += report(1, "geometry suite", criterion_geometry(), t0);
  t0 = now_seconds();
  failures += report(2, "gradient suite", criterion_gradients(), t0);
  t0 = now_seconds();
  failures += report(3, "depth-scaling property", criterion_depth_scaling(), t0);
  t0 = now_seconds();
  failures += report(4, "exact place recall", criterion_exact_recall(), t0);
  t0 = now_seconds();
  failures += report(5, "proximity place recall", criterion_proximity_recall(), t0);
  t0 = now_seconds();
  failures += report(6, "hamming index soundness", criterion_index_soundness(), t0);
  t0 = now_seconds();
  failures += report(7, "overfit sanity", criterion_overfit(), t0);

  const std::string dir = scratch_dir("pipeline");
  t0 = now_seconds();
  eval::run_experiment(default_pipeline_config(dir));
  const double elapsed = now_seconds() - t0;
  failures += report(8, "end-to-end refinement",
                     criterion_end_to_end(dir, elapsed), t0);
  t0 = now_seconds();
  failures += report(9, "pipeline determinism", criterion_determinism(dir), t0);

  std::printf("%s: %d of 9 criteria failed\n",
              failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures;
}
