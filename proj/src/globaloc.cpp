// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/globaloc.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vgloc/error.hpp"

namespace vgloc::loc {

Pose6 relative_pose(const Transform& key_pose, const Transform& live_pose) {
  key_pose.validate();
  live_pose.validate();
  return se3_log(se3_compose(se3_inverse(key_pose), live_pose));
}

GlobalFix localize(const Localizer& models, const GrayImage& live_image,
                   const std::string& live_key) {
  require(models.wnn != nullptr && models.network != nullptr &&
              models.key_images != nullptr,
          ErrorCode::EmptyMemory, "localizer is missing a model");
  const wnn::WnnState& state = *models.wnn;
  require(!state.places.empty(), ErrorCode::EmptyMemory,
          "place memory is empty");
  require(live_image.w >= 1 && live_image.h >= 1, ErrorCode::DimensionMismatch,
          "empty live image");

  // the place recognizer sees its own resampling of the live image
  const wnn::WnnConfig& wcfg = state.cfg;
  const int want_w =
      wcfg.crop_w > 0 ? wcfg.crop_x + wcfg.crop_w : state.syn.img_w;
  const int want_h =
      wcfg.crop_h > 0 ? wcfg.crop_y + wcfg.crop_h : state.syn.img_h;
  const GrayImage wnn_img = (live_image.w == want_w && live_image.h == want_h)
                                ? live_image
                                : bilinear_resize(live_image, want_w, want_h);
  const wnn::CommitteeResult vote =
      wnn::committee_recall(state, wnn_img, models.index);
  require(vote.place_id >= 0 &&
              static_cast<size_t>(vote.place_id) < state.places.size(),
          ErrorCode::EmptyMemory, "recall returned no place");
  require(static_cast<size_t>(vote.place_id) < models.key_images->size(),
          ErrorCode::DimensionMismatch, "no keyframe image for recalled place");

  GlobalFix fix;
  fix.live_key = live_key;
  fix.place_id = vote.place_id;
  fix.vote_fraction = vote.vote_fraction;
  fix.key_pose = state.places[vote.place_id].pose;

  // the network sees its own resampling of both images
  const net::NetworkConfig& ncfg = models.network->config();
  auto for_net = [&](const GrayImage& img) {
    return (img.w == ncfg.in_w && img.h == ncfg.in_h)
               ? img
               : bilinear_resize(img, ncfg.in_w, ncfg.in_h);
  };
  const GrayImage key_img = for_net((*models.key_images)[vote.place_id]);
  const GrayImage live_img = for_net(live_image);
  fix.delta = net::forward(*models.network, key_img, live_img, net::Mode::Eval);
  fix.live_pose = se3_compose(fix.key_pose, se3_exp(fix.delta));
  return fix;
}

void write_fix_log(const std::string& path,
                   const std::vector<GlobalFix>& fixes) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "live_key,place_id,vote,dx,dy,dz,drx,dry,drz,gx,gy,gz\n";
  char buf[512];
  for (const GlobalFix& x : fixes) {
    const Eigen::Vector3d g = x.live_pose.translation();
    std::snprintf(buf, sizeof(buf),
                  ",%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g\n",
                  x.place_id, x.vote_fraction, x.delta.trans[0],
                  x.delta.trans[1], x.delta.trans[2], x.delta.rot[0],
                  x.delta.rot[1], x.delta.rot[2], g[0], g[1], g[2]);
    f << x.live_key << buf;
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

std::vector<FixLogRow> read_fix_log(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "live_key,place_id,vote,dx,dy,dz,drx,dry,drz,gx,gy,gz",
          ErrorCode::DataError, "bad fix log header in " + path);
  std::vector<FixLogRow> rows;
  while (std::getline(f, line)) {
    const size_t comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::DataError,
            "bad fix log row in " + path);
    FixLogRow r;
    r.live_key = line.substr(0, comma);
    double vals[11];
    std::istringstream ss(line.substr(comma + 1));
    for (int i = 0; i < 11; ++i) {
      std::string cell;
      require(static_cast<bool>(std::getline(ss, cell, ',')),
              ErrorCode::DataError, "bad fix log row in " + path);
      vals[i] = std::stod(cell);
    }
    r.place_id = static_cast<int32_t>(vals[0]);
    r.vote_fraction = vals[1];
    r.delta.trans = Eigen::Vector3d(vals[2], vals[3], vals[4]);
    r.delta.rot = Eigen::Vector3d(vals[5], vals[6], vals[7]);
    r.g_translation = Eigen::Vector3d(vals[8], vals[9], vals[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace vgloc::loc
