// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/datapipe.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

#include "vgloc/error.hpp"
#include "vgloc/globaloc.hpp"

namespace vgloc::data {

namespace {

double frame_distance(const FrameRecord& a, const FrameRecord& b) {
  return (a.pose.translation() - b.pose.translation()).norm();
}

// --- deterministic procedural texture -----------------------------------------

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice(int64_t xi, int64_t yi, uint64_t salt) {
  uint64_t h = splitmix64(salt ^ (static_cast<uint64_t>(xi) * 0xA24BAED4963EE407ULL));
  h = splitmix64(h ^ (static_cast<uint64_t>(yi) * 0x9FB21C651E98DF25ULL));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double vnoise(double u, double v, uint64_t salt) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto iu = static_cast<int64_t>(fu), iv = static_cast<int64_t>(fv);
  const double du = u - fu, dv = v - fv;
  const double su = du * du * (3 - 2 * du), sv = dv * dv * (3 - 2 * dv);
  const double a = lattice(iu, iv, salt), b = lattice(iu + 1, iv, salt);
  const double c = lattice(iu, iv + 1, salt), d = lattice(iu + 1, iv + 1, salt);
  const double top = a + (b - a) * su, bot = c + (d - c) * su;
  return top + (bot - top) * sv;
}

// low base frequency so nearby viewpoints stay visually correlated over a
// few meters, with finer octaves for per-place distinctiveness
uint8_t shade(double u, double v, uint64_t salt) {
  const double x = 0.50 * vnoise(u * 0.30, v * 0.30, salt) +
                   0.30 * vnoise(u * 1.10, v * 1.10, salt ^ 0x51ULL) +
                   0.20 * vnoise(u * 3.70, v * 3.70, salt ^ 0xA3ULL);
  return static_cast<uint8_t>(20.0 + 215.0 * x);
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -2;  // -1 ground, >= 0 box index, -2 miss
  int axis = 2;     // normal axis of the struck face
};

void ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
             const SynthWorld::Box& b, int index, Hit& best) {
  double t0 = 1e-6, t1 = best.t;
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / d[a];
    double ta = (b.lo[a] - o[a]) * inv;
    double tb = (b.hi[a] - o[a]) * inv;
    if (inv < 0) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      enter_axis = a;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return;
  }
  if (enter_axis >= 0 && t0 < best.t) {
    best.t = t0;
    best.object = index;
    best.axis = enter_axis;
  }
}

}  // namespace

// --- sequences -----------------------------------------------------------------

void LapSequence::validate() const {
  require(!frames.empty(), ErrorCode::EmptySequence, "lap has no frames");
  for (size_t i = 0; i < frames.size(); ++i) {
    frames[i].pose.validate();
    if (i > 0) {
      require(frames[i].timestamp > frames[i - 1].timestamp,
              ErrorCode::DataError,
              "timestamps must be strictly increasing in lap " + name);
    }
  }
}

LapSequence sample_by_spacing(const LapSequence& seq, double spacing) {
  seq.validate();
  require(spacing > 0, ErrorCode::OutOfRange, "spacing must be > 0");
  LapSequence out;
  out.name = seq.name;
  out.frames.push_back(seq.frames.front());
  for (size_t i = 1; i < seq.frames.size(); ++i) {
    if (frame_distance(seq.frames[i], out.frames.back()) >= spacing) {
      out.frames.push_back(seq.frames[i]);
    }
  }
  return out;
}

std::vector<Correspondence> register_laps(const LapSequence& query,
                                          const LapSequence& reference) {
  query.validate();
  reference.validate();
  std::vector<Correspondence> out;
  out.reserve(query.frames.size());
  for (const FrameRecord& q : query.frames) {
    Correspondence best{0, frame_distance(q, reference.frames[0])};
    for (size_t j = 1; j < reference.frames.size(); ++j) {
      const double d = frame_distance(q, reference.frames[j]);
      if (d < best.distance) best = {j, d};
    }
    out.push_back(best);
  }
  return out;
}

std::vector<PairSample> make_pairs(const LapSequence& live,
                                   const LapSequence& keys, double d_max) {
  require(d_max > 0, ErrorCode::OutOfRange, "d_max must be > 0");
  const std::vector<Correspondence> corr = register_laps(live, keys);
  std::vector<PairSample> out;
  for (size_t i = 0; i < live.frames.size(); ++i) {
    if (corr[i].distance > d_max) continue;
    const FrameRecord& key = keys.frames[corr[i].ref_index];
    const FrameRecord& lv = live.frames[i];
    out.push_back({key, lv, loc::relative_pose(key.pose, lv.pose)});
  }
  return out;
}

DatasetSplits split_datasets(const std::vector<LapSequence>& laps,
                             const SplitSpec& spec) {
  std::unordered_map<std::string, size_t> by_name;
  for (size_t i = 0; i < laps.size(); ++i) {
    require(by_name.emplace(laps[i].name, i).second, ErrorCode::DataError,
            "duplicate lap name: " + laps[i].name);
  }
  std::unordered_map<std::string, int> assigned;  // name -> split ordinal
  auto assign = [&](const std::vector<std::string>& names, int split) {
    for (const std::string& n : names) {
      require(by_name.count(n) > 0, ErrorCode::UnknownLap,
              "unknown lap name: " + n);
      require(assigned.emplace(n, split).second, ErrorCode::OverlapError,
              "lap assigned to two splits: " + n);
    }
  };
  assign(spec.test, 1);
  assign(spec.valid, 2);
  assign(spec.registration, 3);

  DatasetSplits out;
  for (const LapSequence& lap : laps) {
    const auto it = assigned.find(lap.name);
    const int split = it == assigned.end() ? 0 : it->second;
    switch (split) {
      case 0: out.train.push_back(lap); break;
      case 1: out.test.push_back(lap); break;
      case 2: out.valid.push_back(lap); break;
      default: out.registration.push_back(lap); break;
    }
  }
  return out;
}

// --- synthetic world -----------------------------------------------------------

void SynthConfig::validate() const {
  require(n_frames >= 2, ErrorCode::OutOfRange, "need at least 2 frames");
  require(lap_length > 0 && img_w >= 1 && img_h >= 1 && n_boxes >= 0,
          ErrorCode::OutOfRange, "bad synthetic world parameters");
  k.validate();
}

SynthWorld::SynthWorld(uint64_t seed, double loop_radius, int n_boxes)
    : seed_(seed), radius_(loop_radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u_angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> u_dist(5.0, 18.0);
  std::uniform_real_distribution<double> u_half(0.4, 1.5);
  std::uniform_real_distribution<double> u_height(0.8, 4.0);
  std::bernoulli_distribution u_side(0.5);
  boxes_.reserve(n_boxes);
  for (int i = 0; i < n_boxes; ++i) {
    const double angle = u_angle(rng);
    // scatter in an annulus on both sides of the camera loop, never on it
    const double cr = radius_ + (u_side(rng) ? 1.0 : -1.0) * u_dist(rng);
    const Eigen::Vector2d c(cr * std::cos(angle), cr * std::sin(angle));
    const double hx = u_half(rng), hy = u_half(rng), hz = u_height(rng);
    boxes_.push_back({Eigen::Vector3d(c.x() - hx, c.y() - hy, 0.0),
                      Eigen::Vector3d(c.x() + hx, c.y() + hy, hz)});
  }
}

Transform SynthWorld::pose_at(double arc, double lateral_offset,
                              double cam_height, double cam_pitch) const {
  // constant phase keeps every sampled heading away from the rotation-angle
  // singularity of the twist parameterization
  const double theta = arc / radius_ + 1.0 / 7.0;
  const Eigen::Vector3d pos((radius_ + lateral_offset) * std::cos(theta),
                            (radius_ + lateral_offset) * std::sin(theta),
                            cam_height);
  const Eigen::Vector3d tangent(-std::sin(theta), std::cos(theta), 0.0);
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  const Eigen::Vector3d fwd =
      std::cos(cam_pitch) * tangent - std::sin(cam_pitch) * up;
  const Eigen::Vector3d right = fwd.cross(up).normalized();
  const Eigen::Vector3d down = fwd.cross(right);

  Transform t;
  t.m.setIdentity();
  t.m.block<3, 1>(0, 0) = right;
  t.m.block<3, 1>(0, 1) = down;
  t.m.block<3, 1>(0, 2) = fwd;
  t.m.block<3, 1>(0, 3) = pos;
  t.m.block<3, 3>(0, 0) = orthonormalize(t.rotation());
  return t;
}

RenderedFrame SynthWorld::render(const Transform& cam_pose,
                                 const CameraIntrinsics& k, int w,
                                 int h) const {
  cam_pose.validate();
  k.validate();
  RenderedFrame out;
  out.image = GrayImage(w, h);
  out.depth = DepthMap(w, h, 0.f);
  const Eigen::Matrix3d rot = cam_pose.rotation();
  const Eigen::Vector3d origin = cam_pose.translation();

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      // matches backproject(): depth is the camera-z ray parameter
      const Eigen::Vector3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d d = rot * dir_cam;

      Hit hit;
      if (d.z() < 0.0) {
        const double t = -origin.z() / d.z();
        if (t > 1e-6) {
          hit.t = t;
          hit.object = -1;
          hit.axis = 2;
        }
      }
      for (size_t b = 0; b < boxes_.size(); ++b) {
        ray_box(origin, d, boxes_[b], static_cast<int>(b), hit);
      }

      uint8_t px;
      if (hit.object == -2) {
        // sky: texture over ray direction so distant views stay distinct
        const Eigen::Vector3d dn = d.normalized();
        const double az = std::atan2(dn.y(), dn.x());
        const double el = std::asin(std::clamp(dn.z(), -1.0, 1.0));
        px = shade(az * 2.5, el * 2.5, seed_ ^ 0x534B59ULL);
      } else {
        const Eigen::Vector3d p = origin + hit.t * d;
        const uint64_t salt =
            seed_ ^ (static_cast<uint64_t>(hit.object + 1) * 6 + hit.axis);
        // texture in the two in-plane coordinates of the struck face
        const int a1 = (hit.axis + 1) % 3, a2 = (hit.axis + 2) % 3;
        px = shade(p[a1] * 0.7, p[a2] * 0.7, salt);
        out.depth.at(u, v) = static_cast<float>(hit.t);
      }
      out.image.pixels[static_cast<size_t>(v) * w + u] = px;
    }
  }
  return out;
}

LapSequence synth_lap(const SynthConfig& cfg, const std::string& name,
                      const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const double radius = cfg.lap_length / (2.0 * M_PI);
  const SynthWorld world(cfg.seed, radius, cfg.n_boxes);

  LapSequence lap;
  lap.name = name;
  const double step = cfg.lap_length / cfg.n_frames;
  char suffix[32];
  for (int i = 0; i < cfg.n_frames; ++i) {
    const double arc = cfg.start_arc + i * step;
    const Transform pose =
        world.pose_at(arc, cfg.lateral_offset, cfg.cam_height, cfg.cam_pitch);
    const RenderedFrame rf = world.render(pose, cfg.k, cfg.img_w, cfg.img_h);

    std::snprintf(suffix, sizeof(suffix), "_%04d", i);
    FrameRecord fr;
    fr.timestamp = i * 0.1;
    fr.image_key = out_dir + "/" + name + suffix + ".pgm";
    fr.depth_key = out_dir + "/" + name + suffix + ".pfm";
    fr.pose = pose;
    write_pgm(fr.image_key, rf.image);
    write_pfm(fr.depth_key, rf.depth);
    lap.frames.push_back(std::move(fr));
  }
  write_lap_manifest(out_dir + "/" + name + ".csv", lap);
  return lap;
}

RenderedFrame load_frame(const FrameRecord& frame) {
  RenderedFrame out;
  out.image = read_image(frame.image_key);
  if (!frame.depth_key.empty()) out.depth = read_pfm(frame.depth_key);
  return out;
}

// --- manifests -------------------------------------------------------------

void write_lap_manifest(const std::string& path, const LapSequence& lap) {
  lap.validate();
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "timestamp,image_path,depth_path,x,y,z,rx,ry,rz\n";
  char buf[512];
  for (const FrameRecord& fr : lap.frames) {
    const Pose6 tw = se3_log(fr.pose);
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  fr.timestamp, fr.image_key.c_str(), fr.depth_key.c_str(),
                  tw.trans[0], tw.trans[1], tw.trans[2], tw.rot[0], tw.rot[1],
                  tw.rot[2]);
    f << buf;
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

LapSequence read_lap_manifest(const std::string& path,
                              const std::string& name) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "timestamp,image_path,depth_path,x,y,z,rx,ry,rz",
          ErrorCode::DataError, "bad manifest header in " + path);
  LapSequence lap;
  lap.name = name;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 9, ErrorCode::DataError,
            "bad manifest row in " + path);
    FrameRecord fr;
    fr.timestamp = std::stod(cells[0]);
    fr.image_key = cells[1];
    fr.depth_key = cells[2];
    Pose6 tw;
    tw.trans = Eigen::Vector3d(std::stod(cells[3]), std::stod(cells[4]),
                               std::stod(cells[5]));
    tw.rot = Eigen::Vector3d(std::stod(cells[6]), std::stod(cells[7]),
                             std::stod(cells[8]));
    fr.pose = se3_exp(tw);
    lap.frames.push_back(std::move(fr));
  }
  lap.validate();
  return lap;
}

}  // namespace vgloc::data
