// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// VG-RAM weightless neural network for place recognition. Each neuron reads
// S pixel pairs through a fixed random synapse map, turns them into a binary
// pattern (Minchinton comparisons) and stores (pattern, label) pairs.
// Recall is Hamming-nearest per neuron followed by a committee plurality
// vote. A multi-index hash over bit blocks gives sub-linear candidate search.

#ifndef VGLOC_WNN_HPP
#define VGLOC_WNN_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vgloc/geom3d.hpp"
#include "vgloc/image.hpp"

namespace vgloc::wnn {

struct WnnConfig {
  int neurons_x = 96;
  int neurons_y = 54;
  int synapses = 128;  // S: bits per pattern, even
  double synapse_sigma = 10.0;
  uint64_t rng_seed = 0;
  // crop window applied to inputs before pattern extraction; w/h 0 = full
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;

  int neuron_count() const { return neurons_x * neurons_y; }
  void validate() const;
};

/// Per-neuron synapse pixel coordinates, neuron-major.
struct SynapseMap {
  int img_w = 0, img_h = 0;
  int synapses = 0;
  std::vector<uint16_t> us, vs;  // size neuron_count * synapses

  uint16_t u(int neuron, int s) const {
    return us[static_cast<size_t>(neuron) * synapses + s];
  }
  uint16_t v(int neuron, int s) const {
    return vs[static_cast<size_t>(neuron) * synapses + s];
  }
};

struct BitPattern {
  int nbits = 0;
  std::vector<uint64_t> words;

  static BitPattern zeros(int nbits);
  bool get(int bit) const { return (words[bit >> 6] >> (bit & 63)) & 1u; }
  void set(int bit, bool v);
  bool operator==(const BitPattern& o) const = default;
};

int hamming_distance(const uint64_t* a, const uint64_t* b, int words);
int hamming_distance(const BitPattern& a, const BitPattern& b);

/// Append-only pattern store for one neuron.
struct NeuronMemory {
  int nbits = 0;
  std::vector<uint64_t> data;     // size() * words_per_pattern()
  std::vector<int32_t> labels;

  int words_per_pattern() const { return (nbits + 63) / 64; }
  size_t size() const { return labels.size(); }
  const uint64_t* pattern(size_t i) const {
    return data.data() + i * words_per_pattern();
  }
  void append(const BitPattern& p, int32_t label);
};

struct PlaceRecord {
  int32_t id = 0;
  std::string image_key;
  Transform pose;
};

struct WnnState {
  WnnConfig cfg;
  SynapseMap syn;
  std::vector<NeuronMemory> neurons;
  std::vector<PlaceRecord> places;
};

struct RecallResult {
  int32_t label = -1;
  int distance = 0;
};

struct CommitteeResult {
  int32_t place_id = -1;
  double vote_fraction = 0.0;
};

/// Multi-index hash: patterns split into radius+1 disjoint bit blocks, one
/// exact-match table per block. Any stored pattern within Hamming radius r
/// of a query shares at least one block verbatim (pigeonhole).
struct HammingIndex {
  struct Key128 {
    uint64_t lo = 0, hi = 0;
    bool operator==(const Key128& o) const { return lo == o.lo && hi == o.hi; }
  };
  struct Key128Hash {
    size_t operator()(const Key128& k) const {
      uint64_t x = k.lo * 0x9E3779B97F4A7C15ULL ^ (k.hi + 0x7F4A7C15ULL);
      x ^= x >> 29;
      x *= 0xBF58476D1CE4E5B9ULL;
      x ^= x >> 32;
      return static_cast<size_t>(x);
    }
  };
  using Table = std::unordered_map<Key128, std::vector<uint32_t>, Key128Hash>;

  int radius = 0;
  int nbits = 0;
  std::vector<int> block_start;  // size blocks()+1
  std::vector<std::vector<Table>> per_neuron;  // [neuron][block]

  int blocks() const { return radius + 1; }
};

// --- construction / training -------------------------------------------------

SynapseMap build_synapses(const WnnConfig& cfg, int img_w, int img_h);

/// Crop the input per config (no-op when the window is unset).
GrayImage apply_crop(const WnnConfig& cfg, const GrayImage& img);

BitPattern extract_pattern(const GrayImage& image, int neuron,
                           const SynapseMap& syn);

/// Initialize synapses on first use and store one pattern per neuron.
void wnn_train(WnnState& state, const GrayImage& image,
               const PlaceRecord& place);

// --- recall ------------------------------------------------------------------

RecallResult neuron_recall(const BitPattern& pattern, const NeuronMemory& mem);

CommitteeResult committee_recall(const WnnState& state, const GrayImage& image,
                                 const HammingIndex* idx = nullptr);

HammingIndex build_hamming_index(const WnnState& state, int radius = 3);

RecallResult indexed_recall(const BitPattern& pattern, int neuron,
                            const HammingIndex& idx, const NeuronMemory& mem);

// --- persistence -------------------------------------------------------------

void save_wnn(const std::string& path, const WnnState& state);
WnnState load_wnn(const std::string& path);

/// Place table CSV: id,image_key,x,y,z,rx,ry,rz (pose as twist).
void export_places_csv(const std::string& path,
                       const std::vector<PlaceRecord>& places);
std::vector<PlaceRecord> import_places_csv(const std::string& path);

}  // namespace vgloc::wnn

#endif  // VGLOC_WNN_HPP
