#include "railpred/costmodel.hpp"

#include <cmath>
#include <cstring>

#include "railpred/errors.hpp"
#include "railpred/rng.hpp"

namespace railpred {

namespace {

constexpr int kLayerCount = 4;

// (out_ch, in_ch, kh, kw) per layer.
constexpr int kArch[kLayerCount][4] = {
    {8, 3, 3, 3},
    {16, 8, 3, 3},
    {8, 24, 3, 3},
    {1, 8, 1, 1},
};

Tensor crop_to(const Tensor& t, int h, int w) {
    if (t.height == h && t.width == w) return t;
    Tensor out(t.channels, h, w);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y, x);
    return out;
}

Tensor pad_to(const Tensor& t, int h, int w) {
    if (t.height == h && t.width == w) return t;
    Tensor out(t.channels, h, w);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) out.at(c, y, x) = t.at(c, y, x);
    return out;
}

} // namespace

ModelParams init_params(std::uint64_t seed) {
    SplitMix64 rng(seed);
    ModelParams params;
    params.version = kModelVersion;
    for (int l = 0; l < kLayerCount; ++l) {
        ConvLayer layer(kArch[l][0], kArch[l][1], kArch[l][2], kArch[l][3]);
        const double fan_in =
            static_cast<double>(layer.in_ch) * layer.kh * layer.kw;
        double stddev = std::sqrt(2.0 / fan_in);
        if (l == kLayerCount - 1) stddev *= 0.1; // keep the untrained map near uniform 1
        for (auto& w : layer.weights) w = stddev * rng.normal();
        if (l == kLayerCount - 1) layer.bias[0] = softplus_inverse(1.0);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

CostForward cost_forward(const ModelParams& params, const TerrainFeatures& feats,
                         double c_min) {
    if (params.layers.size() != kLayerCount)
        throw ShapeError("cost_forward: model must have 4 layers");
    const Tensor& input = feats.channels;
    if (input.channels != 3) throw ShapeError("cost_forward: features must have 3 channels");
    if (input.height < 8 || input.width < 8)
        throw ShapeError("cost_forward: tile must be at least 8x8 cells");

    CostForward f;
    f.input = input;
    f.pre1 = conv2d_forward(f.input, params.layers[0]);
    f.act1 = relu_forward(f.pre1);
    f.pooled = avgpool2_forward(f.act1);
    f.pre2 = conv2d_forward(f.pooled, params.layers[1]);
    f.act2 = relu_forward(f.pre2);
    f.upsampled = crop_to(upsample_nearest2_forward(f.act2), input.height, input.width);
    f.cat = concat_channels(f.upsampled, f.act1);
    f.pre3 = conv2d_forward(f.cat, params.layers[2]);
    f.act3 = relu_forward(f.pre3);
    f.pre4 = conv2d_forward(f.act3, params.layers[3]);

    f.cost.c_min = c_min;
    f.cost.values = Raster(input.width, input.height);
    for (int row = 0; row < input.height; ++row)
        for (int col = 0; col < input.width; ++col)
            f.cost.values.at(col, row) = softplus(f.pre4.at(0, row, col)) + c_min;
    return f;
}

ModelGrads cost_backward(const ModelParams& params, const CostForward& cache,
                         const Raster& dcost) {
    if (dcost.ncols != cache.input.width || dcost.nrows != cache.input.height)
        throw ShapeError("cost_backward: gradient dimensions do not match tile");

    ModelGrads grads;
    for (const auto& layer : params.layers) grads.layers.push_back(layer.zeros_like());

    Tensor d_pre4(1, cache.input.height, cache.input.width);
    for (int row = 0; row < cache.input.height; ++row)
        for (int col = 0; col < cache.input.width; ++col)
            d_pre4.at(0, row, col) = dcost.at(col, row);
    d_pre4 = softplus_backward(cache.pre4, d_pre4);

    Tensor d_act3;
    conv2d_backward(cache.act3, params.layers[3], d_pre4, d_act3, grads.layers[3]);
    const Tensor d_pre3 = relu_backward(cache.pre3, d_act3);

    Tensor d_cat;
    conv2d_backward(cache.cat, params.layers[2], d_pre3, d_cat, grads.layers[2]);

    Tensor d_upsampled, d_act1_skip;
    concat_channels_backward(d_cat, cache.upsampled.channels, d_upsampled, d_act1_skip);

    const Tensor d_up_full =
        pad_to(d_upsampled, cache.act2.height * 2, cache.act2.width * 2);
    const Tensor d_act2 = upsample_nearest2_backward(cache.act2, d_up_full);
    const Tensor d_pre2 = relu_backward(cache.pre2, d_act2);

    Tensor d_pooled;
    conv2d_backward(cache.pooled, params.layers[1], d_pre2, d_pooled, grads.layers[1]);
    Tensor d_act1 = avgpool2_backward(cache.act1, d_pooled);
    for (std::size_t i = 0; i < d_act1.data.size(); ++i)
        d_act1.data[i] += d_act1_skip.data[i];
    const Tensor d_pre1 = relu_backward(cache.pre1, d_act1);

    Tensor d_input;
    conv2d_backward(cache.input, params.layers[0], d_pre1, d_input, grads.layers[0]);
    return grads;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw FormatError("model file truncated at offset " + std::to_string(pos) +
                                  ": expected " + std::to_string(n) + " more bytes for " +
                                  what + ", got " + std::to_string(bytes.size() - pos),
                              pos);
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
};

constexpr char kMagic[4] = {'C', 'R', 'D', 'M'};

} // namespace

std::string save_model(const ModelParams& params) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, params.version);
    put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const ConvLayer& layer : params.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.out_ch));
        put_u32(out, static_cast<std::uint32_t>(layer.in_ch));
        put_u32(out, static_cast<std::uint32_t>(layer.kh));
        put_u32(out, static_cast<std::uint32_t>(layer.kw));
        for (double w : layer.weights) put_f64(out, w);
        put_u32(out, static_cast<std::uint32_t>(layer.bias.size()));
        for (double b : layer.bias) put_f64(out, b);
    }
    return out;
}

ModelParams load_model(std::string_view bytes) {
    Reader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad magic at offset 0: not a CRDM model file", 0);
    r.pos = 4;

    ModelParams params;
    params.version = r.u32("format version");
    if (params.version != kModelVersion) {
        throw FormatError("unsupported model version " + std::to_string(params.version) +
                              " at offset 4 (expected " + std::to_string(kModelVersion) + ")",
                          4);
    }
    const std::uint32_t nlayers = r.u32("layer count");
    if (nlayers != kLayerCount) {
        throw FormatError("layer count " + std::to_string(nlayers) + " at offset 8 does not "
                              "match this architecture version (expected " +
                              std::to_string(kLayerCount) + ")",
                          8);
    }
    for (std::uint32_t l = 0; l < nlayers; ++l) {
        const std::size_t dim_offset = r.pos;
        const std::uint32_t oc = r.u32("weight dims");
        const std::uint32_t ic = r.u32("weight dims");
        const std::uint32_t kh = r.u32("weight dims");
        const std::uint32_t kw = r.u32("weight dims");
        // version 1 pins the layer shapes; anything else cannot chain
        if (oc != static_cast<std::uint32_t>(kArch[l][0]) ||
            ic != static_cast<std::uint32_t>(kArch[l][1]) ||
            kh != static_cast<std::uint32_t>(kArch[l][2]) ||
            kw != static_cast<std::uint32_t>(kArch[l][3])) {
            throw FormatError("layer " + std::to_string(l) + " dims at offset " +
                                  std::to_string(dim_offset) +
                                  " do not match architecture version 1",
                              dim_offset);
        }
        ConvLayer layer(static_cast<int>(oc), static_cast<int>(ic), static_cast<int>(kh),
                        static_cast<int>(kw));
        for (auto& w : layer.weights) w = r.f64("weights");
        const std::uint32_t blen = r.u32("bias length");
        if (blen != oc) {
            throw FormatError("bias length " + std::to_string(blen) + " at offset " +
                                  std::to_string(r.pos - 4) + " does not match out_ch " +
                                  std::to_string(oc),
                              r.pos - 4);
        }
        for (auto& b : layer.bias) b = r.f64("biases");
        params.layers.push_back(std::move(layer));
    }
    if (r.pos != bytes.size()) {
        throw FormatError("trailing bytes at offset " + std::to_string(r.pos), r.pos);
    }
    return params;
}

} // namespace railpred
