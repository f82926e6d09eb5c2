#include "concurrence/model.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace concurrence {

// ---------------------------------------------------------------------------
// EncoderConfig
// ---------------------------------------------------------------------------

int EncoderConfig::block_channels(int b) const {
    int ch = base_channels;
    for (int i = 1; i < b; ++i) ch /= 2;
    return ch;
}

int EncoderConfig::output_length(int w) const {
    int len = w;
    for (int b = 1; b <= num_blocks; ++b) {
        const int k = (b == 1) ? first_kernel : later_kernel;
        const int s = (b == 1) ? first_stride : later_stride;
        len = Conv1d::out_length(len, k, s);
        if (len < 1) return 0;
    }
    return len;
}

int EncoderConfig::min_width() const {
    // invert the length recurrence block by block
    int needed = 1;
    for (int b = num_blocks; b >= 1; --b) {
        const int k = (b == 1) ? first_kernel : later_kernel;
        const int s = (b == 1) ? first_stride : later_stride;
        needed = (needed - 1) * s + k;
    }
    return needed;
}

void EncoderConfig::validate() const {
    if (num_blocks < 1) throw DataError("encoder config: num_blocks must be >= 1");
    if (first_kernel < 1 || later_kernel < 1 || first_stride < 1 || later_stride < 1)
        throw DataError("encoder config: kernels and strides must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw DataError("encoder config: dropout_rate must be in [0, 1)");
    int divisor = 1;
    for (int b = 1; b < num_blocks; ++b) divisor *= 2;
    if (base_channels < divisor || base_channels % divisor != 0)
        throw DataError("encoder config: base_channels (" + std::to_string(base_channels) +
                        ") must be divisible by 2^(num_blocks-1) = " + std::to_string(divisor));
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

Tensor3 Encoder::forward(const Tensor3& x, bool training, Rng* rng, EncoderCache* cache) {
    if (cache) cache->blocks.resize(blocks.size());
    Tensor3 cur = x;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        BlockCache* bc = cache ? &cache->blocks[i] : nullptr;
        auto& block = blocks[i];
        cur = block.bn.forward(cur, training, bc ? &bc->bn : nullptr);
        cur = block.conv.forward(cur, bc ? &bc->conv : nullptr);
        cur = dropout_forward(cur, dropout_rate, training, rng, bc ? &bc->dropout : nullptr);
        cur = relu_forward(cur, bc ? &bc->relu : nullptr);
    }
    return cur;
}

Tensor3 Encoder::backward(const Tensor3& grad_out, EncoderCache& cache) {
    Tensor3 grad = grad_out;
    for (std::size_t i = blocks.size(); i-- > 0;) {
        auto& block = blocks[i];
        auto& bc = cache.blocks[i];
        grad = relu_backward(grad, bc.relu);
        grad = dropout_backward(grad, bc.dropout);
        grad = block.conv.backward(grad, bc.conv);
        grad = block.bn.backward(grad, bc.bn);
    }
    return grad;
}

void Encoder::zero_grad() {
    for (auto& block : blocks) {
        block.bn.zero_grad();
        block.conv.zero_grad();
    }
}

void Encoder::collect_params(std::vector<ParamRef>& out) {
    for (auto& block : blocks) {
        out.push_back({&block.bn.gamma, &block.bn.grad_gamma});
        out.push_back({&block.bn.beta, &block.bn.grad_beta});
        out.push_back({&block.conv.weight, &block.conv.grad_weight});
        out.push_back({&block.conv.bias, &block.conv.grad_bias});
    }
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

namespace {

Encoder build_encoder(const EncoderConfig& cfg, int in_channels, Rng& rng) {
    Encoder enc;
    enc.dropout_rate = cfg.dropout_rate;
    int ch_in = in_channels;
    for (int b = 1; b <= cfg.num_blocks; ++b) {
        EncoderBlock block;
        block.bn = BatchNorm(ch_in);
        const int ch_out = cfg.block_channels(b);
        const int k = (b == 1) ? cfg.first_kernel : cfg.later_kernel;
        const int s = (b == 1) ? cfg.first_stride : cfg.later_stride;
        block.conv = Conv1d(ch_in, ch_out, k, s);
        block.conv.init(rng);
        enc.blocks.push_back(std::move(block));
        ch_in = ch_out;
    }
    return enc;
}

}  // namespace

ConcurrenceModel build_model(const EncoderConfig& cfg, int kx, int ky, int w,
                             std::uint64_t seed) {
    cfg.validate();
    if (kx < 1 || ky < 1) throw DataError("build_model: input channel counts must be >= 1");
    const int w_out = cfg.output_length(w);
    if (w_out < 1)
        throw DataError("segment too short: w=" + std::to_string(w) +
                        " leaves an empty feature map; minimum w is " +
                        std::to_string(cfg.min_width()) + " for this configuration");

    ConcurrenceModel model;
    model.cfg = cfg;
    model.kx = kx;
    model.ky = ky;
    model.width = w;
    model.feature_channels = cfg.feature_channels();
    model.feature_length = w_out;
    Rng rng(seed);
    model.f = build_encoder(cfg, kx, rng);
    model.g = build_encoder(cfg, ky, rng);
    const std::size_t n_alpha =
        static_cast<std::size_t>(model.feature_channels) * model.feature_channels;
    model.alpha.assign(n_alpha, 0.0);  // untrained model scores exactly 0
    model.grad_alpha.assign(n_alpha, 0.0);
    return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

Tensor3 pack_segments(const std::vector<Segment>& segments) {
    if (segments.empty()) throw DataError("pack_segments: empty batch");
    const int k = segments.front().channels;
    const int w = segments.front().width;
    Tensor3 out(static_cast<int>(segments.size()), k, w);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        if (seg.channels != k || seg.width != w)
            throw DataError("pack_segments: inconsistent segment shapes in batch");
        std::memcpy(out.row(static_cast<int>(i), 0), seg.values.data(),
                    sizeof(double) * seg.values.size());
    }
    return out;
}

Tensor3 encode(Encoder& encoder, const EncoderConfig& cfg, const Segment& segment,
               bool training, Rng* rng) {
    (void)cfg;
    Tensor3 x(1, segment.channels, segment.width);
    std::memcpy(x.row(0, 0), segment.values.data(), sizeof(double) * segment.values.size());
    return encoder.forward(x, training, rng);
}

CovarianceMatrix covariance(const Tensor3& f_features, const Tensor3& g_features, int b) {
    if (f_features.length != g_features.length)
        throw DataError("covariance: feature maps disagree on w' (" +
                        std::to_string(f_features.length) + " vs " +
                        std::to_string(g_features.length) + ")");
    CovarianceMatrix c;
    c.rows = f_features.channels;
    c.cols = g_features.channels;
    c.v.assign(static_cast<std::size_t>(c.rows) * c.cols, 0.0);
    const double inv_w = 1.0 / static_cast<double>(f_features.length);
    for (int i = 0; i < c.rows; ++i) {
        const double* fi = f_features.row(b, i);
        for (int j = 0; j < c.cols; ++j) {
            const double* gj = g_features.row(b, j);
            double acc = 0.0;
            for (int t = 0; t < f_features.length; ++t) acc += fi[t] * gj[t];
            c.v[static_cast<std::size_t>(i) * c.cols + j] = acc * inv_w;
        }
    }
    return c;
}

namespace {

void check_segment_shapes(const ConcurrenceModel& model, const Tensor3& xs, const Tensor3& ys) {
    if (xs.batch != ys.batch)
        throw DataError("score: x and y batches differ in size");
    if (xs.channels != model.kx || ys.channels != model.ky)
        throw DataError("score: channel counts (" + std::to_string(xs.channels) + ", " +
                        std::to_string(ys.channels) + ") do not match model (K_x=" +
                        std::to_string(model.kx) + ", K_y=" + std::to_string(model.ky) + ")");
    if (xs.length != model.width || ys.length != model.width)
        throw DataError("score: segment width (" + std::to_string(xs.length) +
                        ") does not match model w=" + std::to_string(model.width));
}

}  // namespace

std::vector<double> score_batch(ConcurrenceModel& model, const Tensor3& xs, const Tensor3& ys,
                                bool training, Rng* rng, PipelineCache* cache) {
    check_segment_shapes(model, xs, ys);
    PipelineCache local;
    PipelineCache& pc = cache ? *cache : local;
    Tensor3 f_feat = model.f.forward(xs, training, rng, cache ? &pc.f : nullptr);
    Tensor3 g_feat = model.g.forward(ys, training, rng, cache ? &pc.g : nullptr);

    const int kf = model.feature_channels;
    const int wp = f_feat.length;
    const double inv_w = 1.0 / static_cast<double>(wp);
    std::vector<double> scores(static_cast<std::size_t>(xs.batch), 0.0);
    for (int b = 0; b < xs.batch; ++b) {
        // s = sum_ij alpha_ij (F G^T)_ij / w' = sum_t (F^T alpha G)_tt / w'
        double s = 0.0;
        for (int i = 0; i < kf; ++i) {
            const double* fi = f_feat.row(b, i);
            const double* arow = model.alpha.data() + static_cast<std::size_t>(i) * kf;
            for (int j = 0; j < kf; ++j) {
                const double aij = arow[j];
                if (aij == 0.0) continue;
                const double* gj = g_feat.row(b, j);
                double acc = 0.0;
                for (int t = 0; t < wp; ++t) acc += fi[t] * gj[t];
                s += aij * acc;
            }
        }
        scores[static_cast<std::size_t>(b)] = s * inv_w;
    }
    if (cache) {
        pc.f_features = std::move(f_feat);
        pc.g_features = std::move(g_feat);
    }
    return scores;
}

void score_backward(ConcurrenceModel& model, const std::vector<double>& dscores,
                    PipelineCache& cache) {
    const Tensor3& f_feat = cache.f_features;
    const Tensor3& g_feat = cache.g_features;
    if (f_feat.batch == 0)
        throw DataError("score_backward: no cached forward state");
    if (static_cast<int>(dscores.size()) != f_feat.batch)
        throw DataError("score_backward: gradient batch size mismatch");

    const int kf = model.feature_channels;
    const int wp = f_feat.length;
    const double inv_w = 1.0 / static_cast<double>(wp);

    Tensor3 df(f_feat.batch, kf, wp);
    Tensor3 dg(g_feat.batch, kf, wp);
    for (int b = 0; b < f_feat.batch; ++b) {
        const double ds = dscores[static_cast<std::size_t>(b)] * inv_w;
        if (ds == 0.0) continue;
        // d alpha_ij += ds * sum_t F_i(t) G_j(t);  dF_i += ds * alpha_ij G_j; dG_j += ds * alpha_ij F_i
        for (int i = 0; i < kf; ++i) {
            const double* fi = f_feat.row(b, i);
            double* dfi = df.row(b, i);
            double* arow_grad = model.grad_alpha.data() + static_cast<std::size_t>(i) * kf;
            const double* arow = model.alpha.data() + static_cast<std::size_t>(i) * kf;
            for (int j = 0; j < kf; ++j) {
                const double* gj = g_feat.row(b, j);
                double* dgj = dg.row(b, j);
                double dot = 0.0;
                for (int t = 0; t < wp; ++t) dot += fi[t] * gj[t];
                arow_grad[j] += ds * dot;
                const double a = arow[j];
                if (a != 0.0) {
                    const double w1 = ds * a;
                    for (int t = 0; t < wp; ++t) {
                        dfi[t] += w1 * gj[t];
                        dgj[t] += w1 * fi[t];
                    }
                }
            }
        }
    }
    model.f.backward(df, cache.f);
    model.g.backward(dg, cache.g);
}

double score(ConcurrenceModel& model, const Segment& seg_x, const Segment& seg_y,
             bool training, Rng* rng) {
    Tensor3 xs(1, seg_x.channels, seg_x.width);
    std::memcpy(xs.row(0, 0), seg_x.values.data(), sizeof(double) * seg_x.values.size());
    Tensor3 ys(1, seg_y.channels, seg_y.width);
    std::memcpy(ys.row(0, 0), seg_y.values.data(), sizeof(double) * seg_y.values.size());
    return score_batch(model, xs, ys, training, rng).front();
}

void zero_grad(ConcurrenceModel& model) {
    model.f.zero_grad();
    model.g.zero_grad();
    std::fill(model.grad_alpha.begin(), model.grad_alpha.end(), 0.0);
}

std::vector<ParamRef> trainable_params(ConcurrenceModel& model) {
    std::vector<ParamRef> refs;
    model.f.collect_params(refs);
    model.g.collect_params(refs);
    refs.push_back({&model.alpha, &model.grad_alpha});
    return refs;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', 'R'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("model file: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("model file: truncated parameter data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    if (n > (1u << 20)) throw DataError("model file: implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw DataError("model file: truncated string");
    return s;
}

// every parameter array of the model, running stats included, in a fixed order
std::vector<std::pair<std::string, const std::vector<double>*>> manifest_arrays(
    const ConcurrenceModel& model) {
    std::vector<std::pair<std::string, const std::vector<double>*>> arrays;
    const auto add_encoder = [&arrays](const Encoder& enc, const std::string& name) {
        for (std::size_t i = 0; i < enc.blocks.size(); ++i) {
            const auto& block = enc.blocks[i];
            const std::string prefix = name + ".block" + std::to_string(i) + ".";
            arrays.emplace_back(prefix + "bn.gamma", &block.bn.gamma);
            arrays.emplace_back(prefix + "bn.beta", &block.bn.beta);
            arrays.emplace_back(prefix + "bn.running_mean", &block.bn.running_mean);
            arrays.emplace_back(prefix + "bn.running_var", &block.bn.running_var);
            arrays.emplace_back(prefix + "conv.weight", &block.conv.weight);
            arrays.emplace_back(prefix + "conv.bias", &block.conv.bias);
        }
    };
    add_encoder(model.f, "f");
    add_encoder(model.g, "g");
    arrays.emplace_back("alpha", &model.alpha);
    return arrays;
}

}  // namespace

void save_model(const ConcurrenceModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out.write(kMagic, 4);
    write_u32(out, kFormatVersion);
    write_u32(out, static_cast<std::uint32_t>(model.cfg.num_blocks));
    write_u32(out, static_cast<std::uint32_t>(model.cfg.base_channels));
    write_u32(out, static_cast<std::uint32_t>(model.cfg.first_kernel));
    write_u32(out, static_cast<std::uint32_t>(model.cfg.later_kernel));
    write_u32(out, static_cast<std::uint32_t>(model.cfg.first_stride));
    write_u32(out, static_cast<std::uint32_t>(model.cfg.later_stride));
    write_f64(out, model.cfg.dropout_rate);
    write_u32(out, static_cast<std::uint32_t>(model.kx));
    write_u32(out, static_cast<std::uint32_t>(model.ky));
    write_u32(out, static_cast<std::uint32_t>(model.width));
    write_u32(out, model.standardized_inputs ? 1u : 0u);

    write_u32(out, static_cast<std::uint32_t>(model.training_pair_ids.size()));
    for (const auto& id : model.training_pair_ids) write_string(out, id);

    const auto arrays = manifest_arrays(model);
    write_u32(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, data] : arrays) {
        write_string(out, name);
        write_u32(out, static_cast<std::uint32_t>(data->size()));
    }
    for (const auto& [name, data] : arrays)
        for (const double v : *data) write_f64(out, v);
    if (!out) throw DataError("I/O failure while writing '" + path.string() + "'");
}

ConcurrenceModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("'" + path.string() + "' is not a concurrence model file (bad magic)");
    const std::uint32_t version = read_u32(in);
    if (version != kFormatVersion)
        throw DataError("model file version " + std::to_string(version) +
                        " not supported (expected " + std::to_string(kFormatVersion) + ")");

    EncoderConfig cfg;
    cfg.num_blocks = static_cast<int>(read_u32(in));
    cfg.base_channels = static_cast<int>(read_u32(in));
    cfg.first_kernel = static_cast<int>(read_u32(in));
    cfg.later_kernel = static_cast<int>(read_u32(in));
    cfg.first_stride = static_cast<int>(read_u32(in));
    cfg.later_stride = static_cast<int>(read_u32(in));
    cfg.dropout_rate = read_f64(in);
    const int kx = static_cast<int>(read_u32(in));
    const int ky = static_cast<int>(read_u32(in));
    const int w = static_cast<int>(read_u32(in));
    const bool standardized = read_u32(in) != 0;

    ConcurrenceModel model = build_model(cfg, kx, ky, w, /*seed=*/0);
    model.standardized_inputs = standardized;

    const std::uint32_t n_ids = read_u32(in);
    model.training_pair_ids.clear();
    for (std::uint32_t i = 0; i < n_ids; ++i) model.training_pair_ids.push_back(read_string(in));

    // mutable view of the same arrays the writer walked
    std::vector<std::pair<std::string, std::vector<double>*>> arrays;
    for (const auto& [name, data] : manifest_arrays(model))
        arrays.emplace_back(name, const_cast<std::vector<double>*>(data));

    const std::uint32_t n_arrays = read_u32(in);
    if (n_arrays != arrays.size())
        throw DataError("model file: layer manifest has " + std::to_string(n_arrays) +
                        " arrays, this configuration expects " + std::to_string(arrays.size()));
    for (auto& [name, data] : arrays) {
        const std::string stored_name = read_string(in);
        const std::uint32_t stored_size = read_u32(in);
        if (stored_name != name || stored_size != data->size())
            throw DataError("model file: array '" + stored_name + "' (size " +
                            std::to_string(stored_size) + ") does not match expected '" + name +
                            "' (size " + std::to_string(data->size()) + ")");
    }
    for (auto& [name, data] : arrays)
        for (auto& v : *data) v = read_f64(in);
    return model;
}

}  // namespace concurrence
