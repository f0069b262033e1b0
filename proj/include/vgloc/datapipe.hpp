// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset management: lap sequences of (image, depth, pose) frames,
// distance-based subsampling, cross-lap registration by Euclidean proximity,
// key/live pairing within a distance budget, and a deterministic synthetic
// world generator for desk-scale experiments.

#ifndef VGLOC_DATAPIPE_HPP
#define VGLOC_DATAPIPE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vgloc/geom3d.hpp"
#include "vgloc/image.hpp"

namespace vgloc::data {

struct FrameRecord {
  double timestamp = 0;    // seconds
  std::string image_key;   // image file reference
  std::string depth_key;   // optional depth file reference ("" = none)
  Transform pose;          // global camera pose
};

struct LapSequence {
  std::string name;
  std::vector<FrameRecord> frames;

  /// Non-empty, strictly increasing timestamps, valid poses.
  void validate() const;
};

struct PairSample {
  FrameRecord key, live;
  Pose6 delta_gt;  // relative pose, se3_exp(delta) = key.pose^-1 * live.pose
};

/// Greedy thinning: keep the first frame, then every frame whose translation
/// distance to the last *kept* frame is >= spacing.
LapSequence sample_by_spacing(const LapSequence& seq, double spacing);

struct Correspondence {
  size_t ref_index = 0;
  double distance = 0;  // meters, for label auditing
};

/// For each query frame, the reference frame with minimum translation
/// distance (ties resolved to the lower index).
std::vector<Correspondence> register_laps(const LapSequence& query,
                                          const LapSequence& reference);

/// Pair each live frame with its closest keyframe when within d_max meters;
/// live frames farther than d_max from every keyframe are dropped.
std::vector<PairSample> make_pairs(const LapSequence& live,
                                   const LapSequence& keys, double d_max);

/// Lap-name assignment; names absent from every list default to train.
struct SplitSpec {
  std::vector<std::string> test, valid, registration;
};

struct DatasetSplits {
  std::vector<LapSequence> train, valid, test, registration;
};

/// Disjoint assignment by lap name. Unknown names in the spec raise
/// UnknownLap; a lap named in two splits raises OverlapError.
DatasetSplits split_datasets(const std::vector<LapSequence>& laps,
                             const SplitSpec& spec);

// --- synthetic world ---------------------------------------------------------

struct SynthConfig {
  uint64_t seed = 0;
  int n_frames = 100;
  double lap_length = 150.0;  // loop circumference, meters
  int img_w = 64, img_h = 48;
  CameraIntrinsics k{40.0, 40.0, 32.0, 24.0};
  int n_boxes = 40;
  double cam_height = 1.0;      // meters above the ground plane
  double cam_pitch = 0.10;      // radians, looking down toward the ground
  double lateral_offset = 0.0;  // radial trajectory offset, meters
  double start_arc = 0.0;       // arc-length phase of the first frame

  void validate() const;
};

struct RenderedFrame {
  GrayImage image;
  DepthMap depth;
};

/// A deterministic textured 3D environment: a ground plane plus axis-aligned
/// boxes scattered in an annulus around the camera loop, every surface (and
/// the sky) carrying procedural value-noise texture so no two views are flat.
class SynthWorld {
 public:
  struct Box {
    Eigen::Vector3d lo, hi;
  };

  SynthWorld(uint64_t seed, double loop_radius, int n_boxes);

  double loop_radius() const { return radius_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  /// Camera pose at a given arc length along the loop (world z-up; camera
  /// x-right / y-down / z-forward looking along the tangent, pitched down).
  Transform pose_at(double arc, double lateral_offset, double cam_height,
                    double cam_pitch) const;

  /// Pinhole render: ray per pixel through (u-cx)/fx so the stored depth is
  /// the camera-z component and backproject() round-trips exactly. Ray
  /// misses (sky) store depth 0 (invalid).
  RenderedFrame render(const Transform& cam_pose, const CameraIntrinsics& k,
                       int w, int h) const;

 private:
  uint64_t seed_ = 0;
  double radius_ = 0;
  std::vector<Box> boxes_;
};

/// Generate a lap: rendered PGM images, PFM depth, and a manifest CSV under
/// out_dir. Deterministic for a given config.
LapSequence synth_lap(const SynthConfig& cfg, const std::string& name,
                      const std::string& out_dir);

/// Load a frame's image (and depth, when present) from disk.
RenderedFrame load_frame(const FrameRecord& frame);

// --- manifests ---------------------------------------------------------------

/// Lap manifest CSV: timestamp,image_path,depth_path,x,y,z,rx,ry,rz
/// (pose stored as the twist of the global transform).
void write_lap_manifest(const std::string& path, const LapSequence& lap);
LapSequence read_lap_manifest(const std::string& path, const std::string& name);

}  // namespace vgloc::data

#endif  // VGLOC_DATAPIPE_HPP
