#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "railpred/layers.hpp"
#include "railpred/terrain.hpp"

namespace railpred {

/// Strictly positive per-cell traversal cost. Every value is at least
/// c_min (the softplus head plus the floor guarantees positivity, which
/// the path search requires).
struct CostMap {
    Raster values;
    double c_min = 1e-3;
};

/// The convolutional encoder-decoder that maps terrain features to a cost
/// map. One pooling level with a skip concatenation:
///   conv3x3 3->8 relu | avgpool2 | conv3x3 8->16 relu | upsample2 |
///   concat(16+8) | conv3x3 24->8 relu | conv1x1 8->1 | softplus + c_min
struct ModelParams {
    std::uint32_t version = 1;
    std::vector<ConvLayer> layers;

    bool operator==(const ModelParams&) const = default;
};

inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr double kDefaultCostFloor = 1e-3;

/// Deterministic initialization from a SplitMix64 stream: hidden conv
/// weights are He-normal (std sqrt(2/fan_in)), the 1x1 head is scaled down
/// tenfold so the initial map stays near 1, biases are zero except the head
/// bias softplus^-1(1), making the untrained cost map approximately uniform 1.
ModelParams init_params(std::uint64_t seed);

/// Activations cached by the forward pass, consumed by cost_backward.
struct CostForward {
    CostMap cost;
    Tensor input;
    Tensor pre1, act1;
    Tensor pooled, pre2, act2;
    Tensor upsampled, cat;
    Tensor pre3, act3, pre4;
};

/// Runs the network on (3, h, w) features, h and w at least 8. Output dims
/// equal input dims (odd sizes are handled by cropping the upsampled map
/// back to the skip's size before concatenation).
CostForward cost_forward(const ModelParams& params, const TerrainFeatures& feats,
                         double c_min);

struct ModelGrads {
    std::vector<ConvLayer> layers; // same shapes as ModelParams
};

/// Backpropagates a per-cell cost gradient through the network and returns
/// parameter gradients.
ModelGrads cost_backward(const ModelParams& params, const CostForward& cache,
                         const Raster& dcost);

/// Binary model document: magic "CRDM", format version, then each layer's
/// dims, weights and biases, little-endian, no padding. load_model throws
/// FormatError naming the byte offset on any mismatch.
std::string save_model(const ModelParams& params);
ModelParams load_model(std::string_view bytes);

} // namespace railpred
