#pragma once

#include <string>

#include "core/baseline.hpp"
#include "core/encoding.hpp"
#include "core/network.hpp"

namespace ff {

// Checkpoint container, little-endian throughout:
//   magic "FFNET1", u8 model kind (0 ffa, 1 sffa, 2 backprop)
//   forward-forward models:
//     f64 theta, epsilon, clamp, reg_alpha
//     u8 regularize, residual_input, skip_first_layer_goodness,
//        divide_by_squared_norm, goodness_pre_kwta
//     u64 input_dim, u32 layer count
//     per layer: u64 in_dim, u64 width, u8 activation (0 relu, 1 sigmoid),
//                u64 pos_count, u64 kwta_k,
//                f64[in*width] weights, f64[width] bias,
//                adam(weights): u64 t, f64[] m, f64[] v
//                adam(bias):    u64 t, f64[] m, f64[] v
//     codebook: u64 pattern_size, f64 density,
//               rng state (u64 seed, 4x u64, u8 has_cached, f64 cached),
//               u32 class count, per class: i32 label, u8[pattern_size] bits
//   backprop models:
//     u64 input_dim, u32 hidden count, per hidden layer as above (minus
//     pos_count/kwta), u32 head count, per head: u64 classes, u64 in_dim,
//     weights (classes x in), bias, adam pairs.

enum class CheckpointKind : std::uint8_t { Ffa = 0, Sffa = 1, Backprop = 2 };

void save_ff_checkpoint(const std::string& path, const FFNetwork& net,
                        const LabelCodebook& book);

struct LoadedFf {
  FFNetwork net;
  LabelCodebook book;
};
LoadedFf load_ff_checkpoint(const std::string& path);

void save_mlp_checkpoint(const std::string& path, const Mlp& mlp);
Mlp load_mlp_checkpoint(const std::string& path);

CheckpointKind peek_checkpoint_kind(const std::string& path);

}  // namespace ff
