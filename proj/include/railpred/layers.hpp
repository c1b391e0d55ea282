#pragma once

#include <vector>

#include "railpred/tensor.hpp"

namespace railpred {

/// Stride-1 "same" cross-correlation layer. Odd kernel sides only, so the
/// zero padding is symmetric.
struct ConvLayer {
    int out_ch = 0;
    int in_ch = 0;
    int kh = 0;
    int kw = 0;
    std::vector<double> weights; // (out_ch, in_ch, kh, kw) row-major
    std::vector<double> bias;    // out_ch

    ConvLayer() = default;
    ConvLayer(int oc, int ic, int h, int w);

    std::size_t weight_index(int oc, int ic, int y, int x) const {
        return ((static_cast<std::size_t>(oc) * in_ch + ic) * kh + y) * kw + x;
    }
    double w(int oc, int ic, int y, int x) const {
        return weights[weight_index(oc, ic, y, x)];
    }
    double& w(int oc, int ic, int y, int x) {
        return weights[weight_index(oc, ic, y, x)];
    }

    /// Zero-valued layer of the same shape (gradient accumulator).
    ConvLayer zeros_like() const;

    bool operator==(const ConvLayer&) const = default;
};

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);
/// Exact gradients of conv2d_forward; fills input_grad and layer_grad
/// (layer_grad must already have the layer's shape, e.g. zeros_like()).
void conv2d_backward(const Tensor& input, const ConvLayer& layer, const Tensor& upstream,
                     Tensor& input_grad, ConvLayer& layer_grad);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

/// ln(1 + e^x), evaluated as x for x > 30 to dodge overflow. Strictly
/// positive for all finite inputs.
Tensor softplus_forward(const Tensor& input);
Tensor softplus_backward(const Tensor& input, const Tensor& upstream);
double softplus(double x);
double softplus_inverse(double y);

/// 2x2 mean pooling. Odd inputs are padded to even size by edge
/// replication, so output sides are ceil(h/2), ceil(w/2).
Tensor avgpool2_forward(const Tensor& input);
Tensor avgpool2_backward(const Tensor& input, const Tensor& upstream);

Tensor upsample_nearest2_forward(const Tensor& input);
Tensor upsample_nearest2_backward(const Tensor& input, const Tensor& upstream);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void concat_channels_backward(const Tensor& upstream, int a_channels, Tensor& grad_a,
                              Tensor& grad_b);

} // namespace railpred
