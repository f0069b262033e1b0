// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vgloc/datapipe.hpp"
#include "vgloc/error.hpp"
#include "vgloc/globaloc.hpp"
#include "vgloc/tinynet.hpp"
#include "vgloc/wnn.hpp"

namespace fs = std::filesystem;

namespace vgloc::eval {

// --- metrics -----------------------------------------------------------------

MaeCurve mae_accuracy(const std::vector<int>& predicted_frames,
                      const std::vector<int>& truth_frames, int max_mae) {
  require(predicted_frames.size() == truth_frames.size(),
          ErrorCode::LengthMismatch, "prediction/truth length mismatch");
  require(!predicted_frames.empty(), ErrorCode::EmptyInput, "no queries");
  require(max_mae >= 0, ErrorCode::OutOfRange, "max_mae must be >= 0");
  MaeCurve curve;
  curve.accuracy.assign(max_mae + 1, 0.0);
  for (size_t i = 0; i < predicted_frames.size(); ++i) {
    const int err = std::abs(predicted_frames[i] - truth_frames[i]);
    if (err <= max_mae) curve.accuracy[err] += 1.0;
  }
  double cum = 0;
  for (double& a : curve.accuracy) {
    cum += a;
    a = cum / static_cast<double>(predicted_frames.size());
  }
  return curve;
}

namespace {

// linear interpolation between order statistics at position q*(n-1)
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

ErrorStats error_stats(const std::vector<double>& errors) {
  require(!errors.empty(), ErrorCode::EmptyInput, "no error samples");
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  ErrorStats s;
  s.n = sorted.size();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
           static_cast<double>(s.n);
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  s.whisker_low = std::max(sorted.front(), s.q1 - 1.5 * iqr);
  s.whisker_high = std::min(sorted.back(), s.q3 + 1.5 * iqr);
  return s;
}

// --- CSV ---------------------------------------------------------------------

void write_mae_csv(const std::string& path, const MaeCurve& curve) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "mae_frames,accuracy\n";
  char buf[64];
  for (size_t m = 0; m < curve.accuracy.size(); ++m) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", m, curve.accuracy[m]);
    f << buf;
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

MaeCurve read_mae_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "mae_frames,accuracy", ErrorCode::DataError,
          "bad MAE curve header in " + path);
  MaeCurve curve;
  size_t m = 0;
  double acc = 0;
  while (std::getline(f, line)) {
    require(std::sscanf(line.c_str(), "%zu,%lf", &m, &acc) == 2,
            ErrorCode::DataError, "bad MAE curve row in " + path);
    require(m == curve.accuracy.size(), ErrorCode::DataError,
            "non-contiguous MAE curve in " + path);
    curve.accuracy.push_back(acc);
  }
  return curve;
}

void write_stats_csv(const std::string& path, const ErrorStats& s) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "mean,median,q1,q3,whisker_low,whisker_high,n\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n",
                s.mean, s.median, s.q1, s.q3, s.whisker_low, s.whisker_high,
                s.n);
  f << buf;
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

ErrorStats read_stats_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "mean,median,q1,q3,whisker_low,whisker_high,n",
          ErrorCode::DataError, "bad stats header in " + path);
  std::getline(f, line);
  ErrorStats s;
  require(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%zu", &s.mean,
                      &s.median, &s.q1, &s.q3, &s.whisker_low, &s.whisker_high,
                      &s.n) == 7,
          ErrorCode::DataError, "bad stats row in " + path);
  return s;
}

// --- configuration -----------------------------------------------------------

std::string Config::get(const std::string& key,
                        const std::string& fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Config::get_num(const std::string& key, double fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    require(used == it->second.size(), ErrorCode::ConfigError,
            "non-numeric value for config key: " + key);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "non-numeric value for config key: " + key);
  }
}

std::string Config::require_key(const std::string& key) const {
  const auto it = kv.find(key);
  require(it != kv.end(), ErrorCode::ConfigError,
          "missing required config key: " + key);
  return it->second;
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos && eq > first, ErrorCode::ConfigError,
            "bad config line " + std::to_string(line_no) + ": " + line);
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    cfg.kv[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::ConfigError, "cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const Config& cfg) {
  uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over canonical key=value lines
  auto mix = [&h](const std::string& s) {
    for (const char c : s) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [k, v] : cfg.kv) {
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// --- pipeline stages ---------------------------------------------------------

namespace {

struct Paths {
  std::string out, data, models, results;
};

Paths make_paths(const Config& cfg) {
  Paths p;
  p.out = cfg.require_key("out");
  p.data = cfg.get("dataset", p.out + "/data");
  p.models = p.out + "/models";
  p.results = p.out + "/results";
  return p;
}

void require_input(const std::string& path, const std::string& stage) {
  require(fs::exists(path), ErrorCode::ConfigError,
          "stage " + stage + " is missing its input: " + path);
}

data::SynthConfig synth_config(const Config& cfg, double lateral_offset) {
  data::SynthConfig s;
  s.seed = static_cast<uint64_t>(cfg.get_num("seed", 1));
  s.n_frames = static_cast<int>(cfg.get_num("n_frames", 360));
  s.lap_length = cfg.get_num("lap_length", 180.0);
  s.img_w = static_cast<int>(cfg.get_num("img_w", 64));
  s.img_h = static_cast<int>(cfg.get_num("img_h", 48));
  s.n_boxes = static_cast<int>(cfg.get_num("n_boxes", 40));
  s.k.fx = cfg.get_num("fx", 0.625 * s.img_w);
  s.k.fy = cfg.get_num("fy", 0.625 * s.img_w);
  s.k.cx = s.img_w / 2.0;
  s.k.cy = s.img_h / 2.0;
  s.lateral_offset = lateral_offset;
  return s;
}

void stage_synth(const Config& cfg, const Paths& p) {
  data::SynthConfig train = synth_config(cfg, 0.0);
  data::SynthConfig test =
      synth_config(cfg, cfg.get_num("test_offset", 0.4));
  // a half-step phase keeps test frames off the training positions
  test.start_arc = 0.5 * test.lap_length / test.n_frames;
  // two revisit laps provide CNN training pairs against the mapping lap's
  // keyframes; like the test lap they run slightly offset and phase-shifted
  data::SynthConfig revisit_a =
      synth_config(cfg, cfg.get_num("revisit_a_offset", 0.35));
  revisit_a.start_arc = cfg.get_num("revisit_a_phase", 0.17);
  data::SynthConfig revisit_b =
      synth_config(cfg, cfg.get_num("revisit_b_offset", 0.45));
  revisit_b.start_arc = cfg.get_num("revisit_b_phase", 0.33);
  data::synth_lap(train, "train", p.data);
  data::synth_lap(test, "test", p.data);
  data::synth_lap(revisit_a, "revisit_a", p.data);
  data::synth_lap(revisit_b, "revisit_b", p.data);
}

wnn::WnnConfig wnn_config(const Config& cfg) {
  wnn::WnnConfig w;
  w.neurons_x = static_cast<int>(cfg.get_num("wnn_neurons_x", 24));
  w.neurons_y = static_cast<int>(cfg.get_num("wnn_neurons_y", 16));
  w.synapses = static_cast<int>(cfg.get_num("wnn_synapses", 128));
  w.synapse_sigma = cfg.get_num("wnn_sigma", 10.0);
  w.rng_seed = static_cast<uint64_t>(cfg.get_num("seed", 1));
  return w;
}

void stage_train_wnn(const Config& cfg, const Paths& p) {
  require_input(p.data + "/train.csv", "train-wnn");
  const data::LapSequence train =
      data::read_lap_manifest(p.data + "/train.csv", "train");
  const data::LapSequence keys =
      data::sample_by_spacing(train, cfg.get_num("spacing_m", 5.0));

  wnn::WnnState state;
  state.cfg = wnn_config(cfg);
  for (size_t i = 0; i < keys.frames.size(); ++i) {
    const data::FrameRecord& fr = keys.frames[i];
    wnn::PlaceRecord place;
    place.id = static_cast<int32_t>(i);
    place.image_key = fr.image_key;
    place.pose = fr.pose;
    wnn::wnn_train(state, read_image(fr.image_key), place);
  }
  fs::create_directories(p.models);
  wnn::save_wnn(p.models + "/wnn.bin", state);
  wnn::export_places_csv(p.models + "/places.csv", state.places);
}

net::NetworkConfig net_config(const Config& cfg) {
  net::NetworkConfig n = net::NetworkConfig::desk_default();
  n.in_w = static_cast<int>(cfg.get_num("img_w", 64));
  n.in_h = static_cast<int>(cfg.get_num("img_h", 48));
  const double p = cfg.get_num("cnn_dropout", 0.1);
  for (net::LayerSpec& s : n.trunk) {
    if (s.kind == net::LayerKind::Dropout) s.p = p;
  }
  return n;
}

void stage_train_cnn(const Config& cfg, const Paths& p) {
  require_input(p.data + "/train.csv", "train-cnn");
  const data::LapSequence train =
      data::read_lap_manifest(p.data + "/train.csv", "train");
  const data::LapSequence keys =
      data::sample_by_spacing(train, cfg.get_num("spacing_m", 5.0));
  // training pairs come from revisit laps against the mapping lap's
  // keyframes, matching how the network is queried at localization time
  const double dmax = cfg.get_num("dmax_m", 5.0);
  std::vector<data::PairSample> pairs;
  for (const char* lap_name : {"revisit_a", "revisit_b"}) {
    const std::string manifest = p.data + "/" + lap_name + ".csv";
    require_input(manifest, "train-cnn");
    const data::LapSequence lap = data::read_lap_manifest(manifest, lap_name);
    const std::vector<data::PairSample> lap_pairs =
        data::make_pairs(lap, keys, dmax);
    pairs.insert(pairs.end(), lap_pairs.begin(), lap_pairs.end());
  }
  require(!pairs.empty(), ErrorCode::EmptyDataset, "no training pairs");

  const data::SynthConfig scfg = synth_config(cfg, 0.0);
  const int valid_every = static_cast<int>(cfg.get_num("valid_every", 5));
  std::vector<net::TrainSample> tr, va;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const data::PairSample& ps = pairs[i];
    net::TrainSample s;
    s.key = read_image(ps.key.image_key);
    s.live = read_image(ps.live.image_key);
    require(!ps.live.depth_key.empty(), ErrorCode::EmptyDataset,
            "live frame lacks depth: " + ps.live.image_key);
    s.depth = read_pfm(ps.live.depth_key);
    s.k = scfg.k;
    s.delta_gt = ps.delta_gt;
    s.key_pose = ps.key.pose;
    ((i + 1) % valid_every == 0 ? va : tr).push_back(std::move(s));
  }
  require(!tr.empty() && !va.empty(), ErrorCode::EmptyDataset,
          "degenerate train/validation split");

  net::TrainConfig tcfg;
  tcfg.lr0 = cfg.get_num("cnn_lr", 3e-3);
  tcfg.batch_size = static_cast<int>(cfg.get_num("cnn_batch", 16));
  tcfg.max_epochs = static_cast<int>(cfg.get_num("cnn_epochs", 5));
  tcfg.patience = static_cast<int>(cfg.get_num("cnn_patience", 3));
  tcfg.rng_seed = static_cast<uint64_t>(cfg.get_num("seed", 1));

  // repeat the training list within each epoch: the lr schedule halves per
  // epoch, so the desk-scale set needs several passes per lr step
  const int repeat = static_cast<int>(cfg.get_num("cnn_repeat", 6));
  require(repeat >= 1, ErrorCode::ConfigError, "cnn_repeat must be >= 1");
  std::vector<net::TrainSample> tr_rep;
  tr_rep.reserve(tr.size() * repeat);
  for (int r = 0; r < repeat; ++r) {
    tr_rep.insert(tr_rep.end(), tr.begin(), tr.end());
  }

  net::Network network(net_config(cfg),
                       static_cast<uint64_t>(cfg.get_num("seed", 1)));
  const net::TrainResult result = net::train_loop(network, tr_rep, va, tcfg);
  fs::create_directories(p.models);
  net::save_network(p.models + "/net.bin", network);
  net::write_history_csv(p.models + "/history.csv", result.history);
}

void stage_localize(const Config& cfg, const Paths& p) {
  require_input(p.models + "/wnn.bin", "localize");
  require_input(p.models + "/net.bin", "localize");
  require_input(p.data + "/test.csv", "localize");
  const wnn::WnnState state = wnn::load_wnn(p.models + "/wnn.bin");
  const net::Network network = net::load_network(p.models + "/net.bin");
  const data::LapSequence test =
      data::read_lap_manifest(p.data + "/test.csv", "test");

  std::vector<GrayImage> key_images;
  key_images.reserve(state.places.size());
  for (const wnn::PlaceRecord& place : state.places) {
    key_images.push_back(read_image(place.image_key));
  }
  const wnn::HammingIndex index = wnn::build_hamming_index(state, 3);

  loc::Localizer models;
  models.wnn = &state;
  models.index = &index;
  models.network = &network;
  models.key_images = &key_images;

  std::vector<loc::GlobalFix> fixes;
  fixes.reserve(test.frames.size());
  for (const data::FrameRecord& fr : test.frames) {
    fixes.push_back(
        loc::localize(models, read_image(fr.image_key), fr.image_key));
  }
  fs::create_directories(p.results);
  loc::write_fix_log(p.results + "/fixes.csv", fixes);
}

void stage_eval(const Config& cfg, const Paths& p) {
  require_input(p.results + "/fixes.csv", "eval");
  require_input(p.models + "/places.csv", "eval");
  require_input(p.data + "/test.csv", "eval");
  const std::vector<loc::FixLogRow> fixes =
      loc::read_fix_log(p.results + "/fixes.csv");
  const std::vector<wnn::PlaceRecord> places =
      wnn::import_places_csv(p.models + "/places.csv");
  const data::LapSequence test =
      data::read_lap_manifest(p.data + "/test.csv", "test");
  require(fixes.size() == test.frames.size(), ErrorCode::DataError,
          "fix log does not cover the test lap");

  std::vector<double> errors, baseline;
  std::vector<int> predicted, truth;
  for (size_t i = 0; i < fixes.size(); ++i) {
    require(fixes[i].live_key == test.frames[i].image_key,
            ErrorCode::DataError, "fix log order mismatch");
    const Eigen::Vector3d gt = test.frames[i].pose.translation();
    errors.push_back((fixes[i].g_translation - gt).norm());
    const int id = fixes[i].place_id;
    require(id >= 0 && static_cast<size_t>(id) < places.size(),
            ErrorCode::DataError, "fix references an unknown place");
    baseline.push_back((places[id].pose.translation() - gt).norm());
    predicted.push_back(id);
    // truth frame = spatially nearest keyframe (exact on synthetic data)
    int best = 0;
    double best_d = (places[0].pose.translation() - gt).norm();
    for (size_t j = 1; j < places.size(); ++j) {
      const double d = (places[j].pose.translation() - gt).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    truth.push_back(best);
  }

  fs::create_directories(p.results);
  write_stats_csv(p.results + "/stats.csv", error_stats(errors));
  write_stats_csv(p.results + "/stats_baseline.csv", error_stats(baseline));
  const int max_mae = static_cast<int>(cfg.get_num("mae_max", 5));
  write_mae_csv(p.results + "/mae.csv",
                mae_accuracy(predicted, truth, max_mae));
}

void write_run_manifest(const Config& cfg, const Paths& p) {
  std::ofstream f(p.out + "/manifest.txt");
  require(f.good(), ErrorCode::IoError, "cannot write run manifest");
  f << "config_hash=" << config_hash(cfg) << "\n";
  for (const auto& [k, v] : cfg.kv) f << k << "=" << v << "\n";
  require(f.good(), ErrorCode::IoError, "write failed: run manifest");
}

}  // namespace

void run_experiment(const Config& cfg) {
  const Paths p = make_paths(cfg);
  const std::string stages_str = cfg.require_key("stages");
  std::vector<std::string> stages;
  std::istringstream ss(stages_str);
  std::string stage;
  while (std::getline(ss, stage, ',')) {
    if (!stage.empty()) stages.push_back(stage);
  }
  require(!stages.empty(), ErrorCode::ConfigError, "empty stage list");

  fs::create_directories(p.out);
  for (const std::string& s : stages) {
    if (s == "synth") {
      stage_synth(cfg, p);
    } else if (s == "train-wnn") {
      stage_train_wnn(cfg, p);
    } else if (s == "train-cnn") {
      stage_train_cnn(cfg, p);
    } else if (s == "localize") {
      stage_localize(cfg, p);
    } else if (s == "eval") {
      stage_eval(cfg, p);
    } else {
      fail(ErrorCode::ConfigError, "unknown stage: " + s);
    }
  }
  write_run_manifest(cfg, p);
}

}  // namespace vgloc::eval
