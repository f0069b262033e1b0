// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Global localization: recall a keyframe with the weightless place
// recognizer, regress the relative pose with the Siamese network, and
// compose the live global pose G_L = G_K * exp(delta).

#ifndef VGLOC_GLOBALOC_HPP
#define VGLOC_GLOBALOC_HPP

#include <string>
#include <vector>

#include "vgloc/geom3d.hpp"
#include "vgloc/image.hpp"
#include "vgloc/tinynet.hpp"
#include "vgloc/wnn.hpp"

namespace vgloc::loc {

/// The twist delta with se3_exp(delta) = key_pose^-1 * live_pose, i.e. the
/// live camera frame expressed in the key camera frame, so that
/// live_pose = key_pose * se3_exp(delta).
Pose6 relative_pose(const Transform& key_pose, const Transform& live_pose);

struct GlobalFix {
  std::string live_key;
  int32_t place_id = -1;
  Transform key_pose;   // G_K
  Pose6 delta;          // regressed relative pose
  Transform live_pose;  // G_L = G_K * se3_exp(delta)
  double vote_fraction = 0;
};

/// Non-owning view over the trained models needed by localize().
struct Localizer {
  const wnn::WnnState* wnn = nullptr;
  const wnn::HammingIndex* index = nullptr;  // optional accelerator
  const net::Network* network = nullptr;
  /// Keyframe images at capture resolution, indexed by place id.
  const std::vector<GrayImage>* key_images = nullptr;
};

/// Full pipeline on one live image: the place recognizer and the network
/// consume their own bilinear resamplings of the same input.
GlobalFix localize(const Localizer& models, const GrayImage& live_image,
                   const std::string& live_key = "");

/// One row of the fix log (the CSV stores the delta twist and the G_L
/// translation, not the full transforms).
struct FixLogRow {
  std::string live_key;
  int32_t place_id = -1;
  double vote_fraction = 0;
  Pose6 delta;
  Eigen::Vector3d g_translation = Eigen::Vector3d::Zero();
};

/// Fix log CSV: live_key,place_id,vote,dx,dy,dz,drx,dry,drz,gx,gy,gz.
void write_fix_log(const std::string& path, const std::vector<GlobalFix>& fixes);
std::vector<FixLogRow> read_fix_log(const std::string& path);

}  // namespace vgloc::loc

#endif  // VGLOC_GLOBALOC_HPP
