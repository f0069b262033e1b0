// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/wnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace vgloc::wnn {

namespace {

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
}

constexpr uint32_t kMagic = 0x4E574756;  // "VGWN"
constexpr uint32_t kVersion = 1;

}  // namespace

void WnnConfig::validate() const {
  require(neurons_x >= 1 && neurons_y >= 1, ErrorCode::OutOfRange,
          "neuron grid must be non-empty");
  require(synapses >= 2 && synapses % 2 == 0, ErrorCode::OutOfRange,
          "synapse count must be even and >= 2");
  require(synapse_sigma > 0, ErrorCode::OutOfRange, "synapse sigma must be > 0");
}

BitPattern BitPattern::zeros(int nbits) {
  BitPattern p;
  p.nbits = nbits;
  p.words.assign((nbits + 63) / 64, 0);
  return p;
}

void BitPattern::set(int bit, bool v) {
  if (v) {
    words[bit >> 6] |= (uint64_t{1} << (bit & 63));
  } else {
    words[bit >> 6] &= ~(uint64_t{1} << (bit & 63));
  }
}

int hamming_distance(const uint64_t* a, const uint64_t* b, int words) {
  int d = 0;
  for (int i = 0; i < words; ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

int hamming_distance(const BitPattern& a, const BitPattern& b) {
  require(a.nbits == b.nbits, ErrorCode::DimensionMismatch,
          "pattern lengths differ");
  return hamming_distance(a.words.data(), b.words.data(),
                          static_cast<int>(a.words.size()));
}

void NeuronMemory::append(const BitPattern& p, int32_t label) {
  if (labels.empty()) nbits = p.nbits;
  require(p.nbits == nbits, ErrorCode::DimensionMismatch,
          "pattern length differs from memory");
  data.insert(data.end(), p.words.begin(), p.words.end());
  labels.push_back(label);
}

SynapseMap build_synapses(const WnnConfig& cfg, int img_w, int img_h) {
  cfg.validate();
  require(img_w >= 1 && img_h >= 1, ErrorCode::OutOfRange,
          "image dims must be >= 1");
  SynapseMap syn;
  syn.img_w = img_w;
  syn.img_h = img_h;
  syn.synapses = cfg.synapses;
  const size_t total =
      static_cast<size_t>(cfg.neuron_count()) * cfg.synapses;
  syn.us.resize(total);
  syn.vs.resize(total);

  std::mt19937_64 gen(cfg.rng_seed);
  std::normal_distribution<double> gauss(0.0, cfg.synapse_sigma);
  size_t w = 0;
  for (int j = 0; j < cfg.neurons_y; ++j) {
    for (int i = 0; i < cfg.neurons_x; ++i) {
      // neuron receptive field centered at its proportional image position,
      // snapped to a pixel so the sigma -> 0 limit is a single coordinate
      const double cu = std::min<double>(
          img_w - 1, std::floor((i + 0.5) * img_w / cfg.neurons_x));
      const double cv = std::min<double>(
          img_h - 1, std::floor((j + 0.5) * img_h / cfg.neurons_y));
      for (int s = 0; s < cfg.synapses; ++s, ++w) {
        const long u = std::lround(cu + gauss(gen));
        const long v = std::lround(cv + gauss(gen));
        syn.us[w] = static_cast<uint16_t>(std::clamp<long>(u, 0, img_w - 1));
        syn.vs[w] = static_cast<uint16_t>(std::clamp<long>(v, 0, img_h - 1));
      }
    }
  }
  return syn;
}

GrayImage apply_crop(const WnnConfig& cfg, const GrayImage& img) {
  if (cfg.crop_w <= 0 || cfg.crop_h <= 0) return img;
  return crop(img, cfg.crop_x, cfg.crop_y, cfg.crop_w, cfg.crop_h);
}

BitPattern extract_pattern(const GrayImage& image, int neuron,
                           const SynapseMap& syn) {
  require(image.w == syn.img_w && image.h == syn.img_h,
          ErrorCode::DimensionMismatch, "image dims do not match synapse map");
  const int s_count = syn.synapses;
  BitPattern p = BitPattern::zeros(s_count);
  // Minchinton chain: bit k compares synapse k against synapse (k+1) mod S
  uint8_t prev = image.at(syn.u(neuron, 0), syn.v(neuron, 0));
  uint8_t first = prev;
  for (int s = 0; s < s_count; ++s) {
    const uint8_t next = (s + 1 < s_count)
                             ? image.at(syn.u(neuron, s + 1), syn.v(neuron, s + 1))
                             : first;
    if (prev > next) p.set(s, true);
    prev = next;
  }
  return p;
}

void wnn_train(WnnState& state, const GrayImage& image,
               const PlaceRecord& place) {
  const GrayImage view = apply_crop(state.cfg, image);
  if (state.syn.us.empty()) {
    state.syn = build_synapses(state.cfg, view.w, view.h);
    state.neurons.assign(state.cfg.neuron_count(), NeuronMemory{});
  }
  require(view.w == state.syn.img_w && view.h == state.syn.img_h,
          ErrorCode::DimensionMismatch, "image dims do not match trained state");
  require(place.id >= 0 &&
              place.id <= static_cast<int32_t>(state.places.size()),
          ErrorCode::OutOfRange, "place ids must be dense");
  if (place.id == static_cast<int32_t>(state.places.size())) {
    state.places.push_back(place);
  }
  const int n = state.cfg.neuron_count();
  for (int i = 0; i < n; ++i) {
    state.neurons[i].append(extract_pattern(view, i, state.syn), place.id);
  }
}

RecallResult neuron_recall(const BitPattern& pattern, const NeuronMemory& mem) {
  require(!mem.labels.empty(), ErrorCode::EmptyMemory, "neuron memory empty");
  require(pattern.nbits == mem.nbits, ErrorCode::DimensionMismatch,
          "pattern length differs from memory");
  const int words = mem.words_per_pattern();
  int best = pattern.nbits + 1;
  size_t best_i = 0;
  for (size_t i = 0; i < mem.size(); ++i) {
    const int d = hamming_distance(pattern.words.data(), mem.pattern(i), words);
    if (d < best) {  // ties keep the lowest storage index
      best = d;
      best_i = i;
    }
  }
  return {mem.labels[best_i], best};
}

CommitteeResult committee_recall(const WnnState& state, const GrayImage& image,
                                 const HammingIndex* idx) {
  require(!state.neurons.empty() && !state.neurons[0].labels.empty(),
          ErrorCode::EmptyMemory, "untrained state");
  const GrayImage view = apply_crop(state.cfg, image);
  const int n = state.cfg.neuron_count();
  std::vector<int> votes(state.places.size(), 0);
  for (int i = 0; i < n; ++i) {
    const BitPattern p = extract_pattern(view, i, state.syn);
    const RecallResult r = idx ? indexed_recall(p, i, *idx, state.neurons[i])
                               : neuron_recall(p, state.neurons[i]);
    ++votes[r.label];
  }
  int32_t best = 0;
  for (size_t l = 1; l < votes.size(); ++l) {
    if (votes[l] > votes[best]) best = static_cast<int32_t>(l);
  }
  return {best, static_cast<double>(votes[best]) / n};
}

namespace {

HammingIndex::Key128 block_key(const uint64_t* words, int start, int end) {
  HammingIndex::Key128 key;
  for (int bit = start; bit < end; ++bit) {
    const int rel = bit - start;
    const uint64_t b = (words[bit >> 6] >> (bit & 63)) & 1u;
    if (rel < 64) {
      key.lo |= b << rel;
    } else {
      key.hi |= b << (rel - 64);
    }
  }
  return key;
}

}  // namespace

HammingIndex build_hamming_index(const WnnState& state, int radius) {
  require(radius >= 0, ErrorCode::OutOfRange, "radius must be >= 0");
  require(!state.neurons.empty() && !state.neurons[0].labels.empty(),
          ErrorCode::EmptyMemory, "untrained state");
  HammingIndex idx;
  idx.radius = radius;
  idx.nbits = state.neurons[0].nbits;
  const int blocks = idx.blocks();
  idx.block_start.resize(blocks + 1);
  for (int b = 0; b <= blocks; ++b) {
    idx.block_start[b] = static_cast<int>(
        static_cast<int64_t>(b) * idx.nbits / blocks);
  }
  require((idx.nbits + blocks - 1) / blocks <= 128, ErrorCode::OutOfRange,
          "block width above 128 bits");

  idx.per_neuron.resize(state.neurons.size());
  for (size_t n = 0; n < state.neurons.size(); ++n) {
    const NeuronMemory& mem = state.neurons[n];
    auto& tables = idx.per_neuron[n];
    tables.resize(blocks);
    for (size_t i = 0; i < mem.size(); ++i) {
      const uint64_t* w = mem.pattern(i);
      for (int b = 0; b < blocks; ++b) {
        tables[b][block_key(w, idx.block_start[b], idx.block_start[b + 1])]
            .push_back(static_cast<uint32_t>(i));
      }
    }
  }
  return idx;
}

RecallResult indexed_recall(const BitPattern& pattern, int neuron,
                            const HammingIndex& idx, const NeuronMemory& mem) {
  require(!mem.labels.empty(), ErrorCode::EmptyMemory, "neuron memory empty");
  require(pattern.nbits == idx.nbits, ErrorCode::DimensionMismatch,
          "pattern length differs from index");
  const auto& tables = idx.per_neuron[neuron];
  std::vector<uint32_t> candidates;
  for (int b = 0; b < idx.blocks(); ++b) {
    const auto key = block_key(pattern.words.data(), idx.block_start[b],
                               idx.block_start[b + 1]);
    const auto it = tables[b].find(key);
    if (it != tables[b].end()) {
      candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
  }
  if (candidates.empty()) {
    return neuron_recall(pattern, mem);  // fallback to full linear scan
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  const int words = mem.words_per_pattern();
  int best = pattern.nbits + 1;
  uint32_t best_i = 0;
  for (const uint32_t i : candidates) {
    const int d = hamming_distance(pattern.words.data(), mem.pattern(i), words);
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  return {mem.labels[best_i], best};
}

void save_wnn(const std::string& path, const WnnState& state) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  write_pod(f, kMagic);
  write_pod(f, kVersion);
  const WnnConfig& c = state.cfg;
  write_pod(f, c.neurons_x);
  write_pod(f, c.neurons_y);
  write_pod(f, c.synapses);
  write_pod(f, c.synapse_sigma);
  write_pod(f, c.rng_seed);
  write_pod(f, c.crop_x);
  write_pod(f, c.crop_y);
  write_pod(f, c.crop_w);
  write_pod(f, c.crop_h);

  write_pod(f, state.syn.img_w);
  write_pod(f, state.syn.img_h);
  write_pod(f, state.syn.synapses);
  const uint64_t coords = state.syn.us.size();
  write_pod(f, coords);
  f.write(reinterpret_cast<const char*>(state.syn.us.data()),
          static_cast<std::streamsize>(coords * sizeof(uint16_t)));
  f.write(reinterpret_cast<const char*>(state.syn.vs.data()),
          static_cast<std::streamsize>(coords * sizeof(uint16_t)));

  const uint64_t n_neurons = state.neurons.size();
  write_pod(f, n_neurons);
  for (const NeuronMemory& mem : state.neurons) {
    write_pod(f, mem.nbits);
    const uint64_t count = mem.size();
    write_pod(f, count);
    f.write(reinterpret_cast<const char*>(mem.labels.data()),
            static_cast<std::streamsize>(count * sizeof(int32_t)));
    f.write(reinterpret_cast<const char*>(mem.data.data()),
            static_cast<std::streamsize>(mem.data.size() * sizeof(uint64_t)));
  }

  const uint64_t n_places = state.places.size();
  write_pod(f, n_places);
  for (const PlaceRecord& p : state.places) {
    write_pod(f, p.id);
    const uint64_t len = p.image_key.size();
    write_pod(f, len);
    f.write(p.image_key.data(), static_cast<std::streamsize>(len));
    for (int r = 0; r < 4; ++r) {
      for (int col = 0; col < 4; ++col) {
        write_pod(f, p.pose.m(r, col));  // row-major doubles
      }
    }
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

WnnState load_wnn(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  uint32_t magic = 0, version = 0;
  read_pod(f, magic);
  read_pod(f, version);
  require(magic == kMagic, ErrorCode::DataError, "not a WNN model: " + path);
  require(version == kVersion, ErrorCode::DataError,
          "unsupported WNN model version");
  WnnState state;
  WnnConfig& c = state.cfg;
  read_pod(f, c.neurons_x);
  read_pod(f, c.neurons_y);
  read_pod(f, c.synapses);
  read_pod(f, c.synapse_sigma);
  read_pod(f, c.rng_seed);
  read_pod(f, c.crop_x);
  read_pod(f, c.crop_y);
  read_pod(f, c.crop_w);
  read_pod(f, c.crop_h);

  read_pod(f, state.syn.img_w);
  read_pod(f, state.syn.img_h);
  read_pod(f, state.syn.synapses);
  uint64_t coords = 0;
  read_pod(f, coords);
  state.syn.us.resize(coords);
  state.syn.vs.resize(coords);
  f.read(reinterpret_cast<char*>(state.syn.us.data()),
         static_cast<std::streamsize>(coords * sizeof(uint16_t)));
  f.read(reinterpret_cast<char*>(state.syn.vs.data()),
         static_cast<std::streamsize>(coords * sizeof(uint16_t)));

  uint64_t n_neurons = 0;
  read_pod(f, n_neurons);
  state.neurons.resize(n_neurons);
  for (NeuronMemory& mem : state.neurons) {
    read_pod(f, mem.nbits);
    uint64_t count = 0;
    read_pod(f, count);
    mem.labels.resize(count);
    f.read(reinterpret_cast<char*>(mem.labels.data()),
           static_cast<std::streamsize>(count * sizeof(int32_t)));
    mem.data.resize(count * mem.words_per_pattern());
    f.read(reinterpret_cast<char*>(mem.data.data()),
           static_cast<std::streamsize>(mem.data.size() * sizeof(uint64_t)));
  }

  uint64_t n_places = 0;
  read_pod(f, n_places);
  state.places.resize(n_places);
  for (PlaceRecord& p : state.places) {
    read_pod(f, p.id);
    uint64_t len = 0;
    read_pod(f, len);
    p.image_key.resize(len);
    f.read(p.image_key.data(), static_cast<std::streamsize>(len));
    for (int r = 0; r < 4; ++r) {
      for (int col = 0; col < 4; ++col) {
        read_pod(f, p.pose.m(r, col));
      }
    }
  }
  require(f.good(), ErrorCode::IoError, "truncated WNN model: " + path);
  return state;
}

void export_places_csv(const std::string& path,
                       const std::vector<PlaceRecord>& places) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "id,image_key,x,y,z,rx,ry,rz\n";
  char buf[256];
  for (const PlaceRecord& p : places) {
    const Pose6 tw = se3_log(p.pose);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  tw.trans.x(), tw.trans.y(), tw.trans.z(), tw.rot.x(),
                  tw.rot.y(), tw.rot.z());
    f << p.id << "," << p.image_key << "," << buf << "\n";
  }
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

std::vector<PlaceRecord> import_places_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);
  require(line == "id,image_key,x,y,z,rx,ry,rz", ErrorCode::DataError,
          "bad place table header in " + path);
  std::vector<PlaceRecord> places;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 8, ErrorCode::DataError,
            "bad place table row in " + path);
    PlaceRecord p;
    p.id = static_cast<int32_t>(std::stol(cells[0]));
    p.image_key = cells[1];
    Pose6 tw;
    tw.trans = Eigen::Vector3d(std::stod(cells[2]), std::stod(cells[3]),
                               std::stod(cells[4]));
    tw.rot = Eigen::Vector3d(std::stod(cells[5]), std::stod(cells[6]),
                             std::stod(cells[7]));
    p.pose = se3_exp(tw);
    places.push_back(std::move(p));
  }
  return places;
}

}  // namespace vgloc::wnn
