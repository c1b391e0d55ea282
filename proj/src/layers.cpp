#include "railpred/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "railpred/errors.hpp"

namespace railpred {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

} // namespace

ConvLayer::ConvLayer(int oc, int ic, int h, int w)
    : out_ch(oc), in_ch(ic), kh(h), kw(w),
      weights(static_cast<std::size_t>(oc) * ic * h * w, 0.0), bias(oc, 0.0) {
    if (h % 2 == 0 || w % 2 == 0) throw ShapeError("conv kernel sides must be odd");
}

ConvLayer ConvLayer::zeros_like() const { return ConvLayer(out_ch, in_ch, kh, kw); }

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
    require(input.channels == layer.in_ch,
            "conv2d: input has " + std::to_string(input.channels) + " channels, layer expects " +
                std::to_string(layer.in_ch));
    const int h = input.height, w = input.width;
    const int cy = layer.kh / 2, cx = layer.kw / 2;
    Tensor out(layer.out_ch, h, w);
    // Per output cell the accumulation order is bias, then (ic, ky, kx); the
    // shifted-row loop just makes the inner stride contiguous.
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        double* out_plane = &out.data[out.index(oc, 0, 0)];
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
            out_plane[i] = layer.bias[oc];
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            for (int ky = 0; ky < layer.kh; ++ky) {
                const int dy = ky - cy;
                const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                for (int kx = 0; kx < layer.kw; ++kx) {
                    const int dx = kx - cx;
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    const double wv = layer.w(oc, ic, ky, kx);
                    for (int y = y0; y < y1; ++y) {
                        double* out_row = &out.data[out.index(oc, y, 0)];
                        const double* in_row = &input.data[input.index(ic, y + dy, 0)];
                        for (int x = x0; x < x1; ++x) out_row[x] += wv * in_row[x + dx];
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const ConvLayer& layer, const Tensor& upstream,
                     Tensor& input_grad, ConvLayer& layer_grad) {
    require(input.channels == layer.in_ch, "conv2d backward: input channel mismatch");
    require(upstream.channels == layer.out_ch && upstream.height == input.height &&
                upstream.width == input.width,
            "conv2d backward: upstream shape mismatch");
    const int h = input.height, w = input.width;
    const int cy = layer.kh / 2, cx = layer.kw / 2;
    input_grad = Tensor(input.channels, h, w);

    for (int oc = 0; oc < layer.out_ch; ++oc) {
        double bsum = 0.0;
        const double* up_plane = &upstream.data[upstream.index(oc, 0, 0)];
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) bsum += up_plane[i];
        layer_grad.bias[oc] += bsum;

        for (int ic = 0; ic < layer.in_ch; ++ic) {
            for (int ky = 0; ky < layer.kh; ++ky) {
                const int dy = ky - cy;
                const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                for (int kx = 0; kx < layer.kw; ++kx) {
                    const int dx = kx - cx;
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    const double wv = layer.w(oc, ic, ky, kx);
                    double wsum = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* up_row = &upstream.data[upstream.index(oc, y, 0)];
                        const double* in_row = &input.data[input.index(ic, y + dy, 0)];
                        double* ig_row = &input_grad.data[input_grad.index(ic, y + dy, 0)];
                        for (int x = x0; x < x1; ++x) {
                            wsum += up_row[x] * in_row[x + dx];
                            ig_row[x + dx] += up_row[x] * wv;
                        }
                    }
                    layer_grad.w(oc, ic, ky, kx) += wsum;
                }
            }
        }
    }
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    require(input.same_shape(upstream), "relu backward: shape mismatch");
    Tensor out = upstream;
    // Subgradient at exactly 0 is taken as 0.
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (input.data[i] <= 0.0) out.data[i] = 0.0;
    }
    return out;
}

double softplus(double x) {
    if (x > 30.0) return x;
    const double v = std::log1p(std::exp(x));
    // exp underflows to 0 below x ~ -745; clamp so the result stays strictly
    // positive for every finite input.
    return v > 0.0 ? v : std::numeric_limits<double>::min();
}

double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

Tensor softplus_forward(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data) v = softplus(v);
    return out;
}

Tensor softplus_backward(const Tensor& input, const Tensor& upstream) {
    require(input.same_shape(upstream), "softplus backward: shape mismatch");
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] *= 1.0 / (1.0 + std::exp(-input.data[i]));
    }
    return out;
}

Tensor avgpool2_forward(const Tensor& input) {
    const int oh = (input.height + 1) / 2, ow = (input.width + 1) / 2;
    Tensor out(input.channels, oh, ow);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int iy = std::min(2 * y + dy, input.height - 1);
                        const int ix = std::min(2 * x + dx, input.width - 1);
                        acc += input.at(c, iy, ix);
                    }
                }
                out.at(c, y, x) = acc * 0.25;
            }
        }
    }
    return out;
}

Tensor avgpool2_backward(const Tensor& input, const Tensor& upstream) {
    const int oh = (input.height + 1) / 2, ow = (input.width + 1) / 2;
    require(upstream.channels == input.channels && upstream.height == oh &&
                upstream.width == ow,
            "avgpool2 backward: upstream shape mismatch");
    Tensor grad(input.channels, input.height, input.width);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const double g = upstream.at(c, y, x) * 0.25;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int iy = std::min(2 * y + dy, input.height - 1);
                        const int ix = std::min(2 * x + dx, input.width - 1);
                        grad.at(c, iy, ix) += g; // replicated edge cells collect both shares
                    }
                }
            }
        }
    }
    return grad;
}

Tensor upsample_nearest2_forward(const Tensor& input) {
    Tensor out(input.channels, input.height * 2, input.width * 2);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                out.at(c, y, x) = input.at(c, y / 2, x / 2);
            }
        }
    }
    return out;
}

Tensor upsample_nearest2_backward(const Tensor& input, const Tensor& upstream) {
    require(upstream.channels == input.channels && upstream.height == input.height * 2 &&
                upstream.width == input.width * 2,
            "upsample backward: upstream shape mismatch");
    Tensor grad(input.channels, input.height, input.width);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < upstream.height; ++y) {
            for (int x = 0; x < upstream.width; ++x) {
                grad.at(c, y / 2, x / 2) += upstream.at(c, y, x);
            }
        }
    }
    return grad;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require(a.height == b.height && a.width == b.width,
            "concat: spatial dimensions must match");
    Tensor out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

void concat_channels_backward(const Tensor& upstream, int a_channels, Tensor& grad_a,
                              Tensor& grad_b) {
    require(a_channels >= 0 && a_channels <= upstream.channels,
            "concat backward: channel split out of range");
    grad_a = Tensor(a_channels, upstream.height, upstream.width);
    grad_b = Tensor(upstream.channels - a_channels, upstream.height, upstream.width);
    std::copy(upstream.data.begin(), upstream.data.begin() + grad_a.data.size(),
              grad_a.data.begin());
    std::copy(upstream.data.begin() + grad_a.data.size(), upstream.data.end(),
              grad_b.data.begin());
}

} // namespace railpred
