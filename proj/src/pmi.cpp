#include "retina/pmi.hpp"

#include <cmath>

#include "retina/rng.hpp"

namespace retina {

FeatureBlock feature_block(int channels, int height, int width) {
    if (channels < 1 || height < 1 || width < 1)
        fail(ErrorCode::dimension, "feature block dimensions must be positive");
    FeatureBlock b;
    b.channels = channels;
    b.height = height;
    b.width = width;
    b.data = Eigen::MatrixXd::Zero(channels, Eigen::Index(height) * width);
    return b;
}

void pmi_validate(const PmiConfig& config) {
    if (config.channels < 1 || config.heads < 1)
        fail(ErrorCode::parameter, "channels and heads must be positive");
    if (config.channels % config.heads != 0)
        fail(ErrorCode::parameter, "channels must be divisible by the head count");
    if (config.channels % 4 != 0)
        fail(ErrorCode::parameter, "channels must be divisible by 4 for 2D sinusoidal embeddings");
    if (config.pooled_h < 1 || config.pooled_w < 1)
        fail(ErrorCode::parameter, "pooled size must be >= 1");
    if (config.ffn_expansion < 1) fail(ErrorCode::parameter, "ffn expansion must be >= 1");
    if (config.w_pool < 0.0 || config.w_pool > 1.0)
        fail(ErrorCode::parameter, "w_pool must lie in [0,1]");
}

namespace {

Eigen::MatrixXd seeded_matrix(rng::Stream& stream, Eigen::Index rows, Eigen::Index cols,
                              double bound) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stream.next_symmetric(bound);
    return m;
}

PmiWeights::Direction seeded_direction(rng::Stream& stream, const PmiConfig& config) {
    const int c = config.channels;
    const int hidden = config.ffn_expansion * c;
    const double bound = 1.0 / std::sqrt(double(c));
    PmiWeights::Direction dir;
    dir.wq = seeded_matrix(stream, c, c, bound);
    dir.wk = seeded_matrix(stream, c, c, bound);
    dir.wv = seeded_matrix(stream, c, c, bound);
    dir.wo = seeded_matrix(stream, c, c, bound);
    dir.ffn_w1 = seeded_matrix(stream, c, hidden, bound);
    dir.ffn_w2 = seeded_matrix(stream, hidden, c, bound);
    dir.phi = seeded_matrix(stream, c, c, bound);
    dir.ln1_scale = Eigen::VectorXd::Ones(c);
    dir.ln1_offset = Eigen::VectorXd::Zero(c);
    dir.ln2_scale = Eigen::VectorXd::Ones(c);
    dir.ln2_offset = Eigen::VectorXd::Zero(c);
    return dir;
}

}  // namespace

PmiWeights PmiWeights::seeded(const PmiConfig& config) {
    pmi_validate(config);
    rng::Stream stream(config.seed);
    PmiWeights w;
    w.p_from_m = seeded_direction(stream, config);
    w.m_from_p = seeded_direction(stream, config);
    w.fuse = seeded_matrix(stream, 2 * config.channels, config.channels,
                           1.0 / std::sqrt(double(config.channels)));
    return w;
}

Eigen::MatrixXd positional_embeddings(const PmiConfig& config) {
    const int c = config.channels;
    const int half = c / 2;
    Eigen::MatrixXd emb(config.tokens(), c);
    for (int row = 0; row < config.pooled_h; ++row) {
        for (int col = 0; col < config.pooled_w; ++col) {
            const int token = row * config.pooled_w + col;
            for (int j = 0; j < half; j += 2) {
                const double freq = std::pow(10000.0, -double(j) / double(half));
                emb(token, j) = std::sin(double(col) * freq);
                emb(token, j + 1) = std::cos(double(col) * freq);
                emb(token, half + j) = std::sin(double(row) * freq);
                emb(token, half + j + 1) = std::cos(double(row) * freq);
            }
        }
    }
    return emb;
}

Eigen::MatrixXd pool_tokens(const FeatureBlock& block, const PmiConfig& config) {
    pmi_validate(config);
    if (block.channels != config.channels)
        fail(ErrorCode::dimension, "feature block channel count does not match config");
    const int in_h = block.height;
    const int in_w = block.width;
    const int out_h = config.pooled_h;
    const int out_w = config.pooled_w;

    Eigen::MatrixXd tokens(config.tokens(), config.channels);
    for (int oy = 0; oy < out_h; ++oy) {
        const int y0 = int(Eigen::Index(oy) * in_h / out_h);
        const int y1 = int((Eigen::Index(oy) + 1) * in_h + out_h - 1) / out_h;  // ceil
        for (int ox = 0; ox < out_w; ++ox) {
            const int x0 = int(Eigen::Index(ox) * in_w / out_w);
            const int x1 = int((Eigen::Index(ox) + 1) * in_w + out_w - 1) / out_w;
            const int token = oy * out_w + ox;
            const double count = double(y1 - y0) * double(x1 - x0);
            for (int ch = 0; ch < block.channels; ++ch) {
                double sum = 0.0;
                double peak = block.at(ch, y0, x0);
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) {
                        const double v = block.at(ch, y, x);
                        sum += v;
                        if (v > peak) peak = v;
                    }
                tokens(token, ch) = config.w_pool * (sum / count) + (1.0 - config.w_pool) * peak;
            }
        }
    }
    tokens += positional_embeddings(config);
    return tokens;
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& tokens, const Eigen::VectorXd& scale,
                           const Eigen::VectorXd& offset) {
    constexpr double eps = 1e-5;
    const Eigen::Index c = tokens.cols();
    Eigen::MatrixXd out(tokens.rows(), c);
    for (Eigen::Index row = 0; row < tokens.rows(); ++row) {
        const double mean = tokens.row(row).mean();
        double var = 0.0;
        for (Eigen::Index j = 0; j < c; ++j) {
            const double d = tokens(row, j) - mean;
            var += d * d;
        }
        var /= double(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (Eigen::Index j = 0; j < c; ++j)
            out(row, j) = (tokens(row, j) - mean) * inv * scale(j) + offset(j);
    }
    return out;
}

Eigen::MatrixXd multi_head_attention(const Eigen::MatrixXd& queries_from,
                                     const Eigen::MatrixXd& keys_values_from,
                                     const PmiWeights::Direction& dir, const PmiConfig& config,
                                     std::vector<Eigen::MatrixXd>* attention) {
    const int c = config.channels;
    if (queries_from.cols() != c || keys_values_from.cols() != c)
        fail(ErrorCode::dimension, "token matrices must have C columns");
    const int d_k = config.head_dim();
    const double scale = 1.0 / std::sqrt(double(d_k));
    const Eigen::Index n_q = queries_from.rows();
    const Eigen::Index n_k = keys_values_from.rows();

    const Eigen::MatrixXd q = queries_from * dir.wq;
    const Eigen::MatrixXd k = keys_values_from * dir.wk;
    const Eigen::MatrixXd v = keys_values_from * dir.wv;

    if (attention) attention->clear();
    Eigen::MatrixXd heads(n_q, c);
    for (int h = 0; h < config.heads; ++h) {
        const auto qh = q.middleCols(Eigen::Index(h) * d_k, d_k);
        const auto kh = k.middleCols(Eigen::Index(h) * d_k, d_k);
        const auto vh = v.middleCols(Eigen::Index(h) * d_k, d_k);
        Eigen::MatrixXd scores = (qh * kh.transpose()) * scale;
        // Row softmax, max-subtracted for stability.
        for (Eigen::Index row = 0; row < n_q; ++row) {
            const double peak = scores.row(row).maxCoeff();
            double denom = 0.0;
            for (Eigen::Index j = 0; j < n_k; ++j) {
                scores(row, j) = std::exp(scores(row, j) - peak);
                denom += scores(row, j);
            }
            scores.row(row) /= denom;
        }
        heads.middleCols(Eigen::Index(h) * d_k, d_k) = scores * vh;
        if (attention) attention->push_back(scores);
    }
    return heads * dir.wo;
}

Eigen::MatrixXd cross_attend(const Eigen::MatrixXd& queries_from,
                             const Eigen::MatrixXd& keys_values_from,
                             const PmiWeights::Direction& dir, const PmiConfig& config,
                             std::vector<Eigen::MatrixXd>* attention) {
    const Eigen::MatrixXd attended =
        multi_head_attention(queries_from, keys_values_from, dir, config, attention);
    const Eigen::MatrixXd x1 = layer_norm(queries_from + attended, dir.ln1_scale, dir.ln1_offset);
    const Eigen::MatrixXd hidden = (x1 * dir.ffn_w1).cwiseMax(0.0);  // ReLU
    const Eigen::MatrixXd x2 = layer_norm(x1 + hidden * dir.ffn_w2, dir.ln2_scale, dir.ln2_offset);
    return x2;
}

FeatureBlock upsample_tokens(const Eigen::MatrixXd& tokens, int pooled_h, int pooled_w, int out_h,
                             int out_w, Upsample mode) {
    const int c = int(tokens.cols());
    FeatureBlock out = feature_block(c, out_h, out_w);
    const double sy = double(pooled_h) / double(out_h);
    const double sx = double(pooled_w) / double(out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const Eigen::Index pixel = Eigen::Index(y) * out_w + x;
            if (mode == Upsample::nearest) {
                int iy = int(std::floor(double(y) * sy));
                int ix = int(std::floor(double(x) * sx));
                iy = std::min(iy, pooled_h - 1);
                ix = std::min(ix, pooled_w - 1);
                out.data.col(pixel) = tokens.row(iy * pooled_w + ix).transpose();
                continue;
            }
            // Half-pixel-center bilinear.
            double fy = (double(y) + 0.5) * sy - 0.5;
            double fx = (double(x) + 0.5) * sx - 0.5;
            fy = std::min(std::max(fy, 0.0), double(pooled_h - 1));
            fx = std::min(std::max(fx, 0.0), double(pooled_w - 1));
            const int y0 = int(std::floor(fy));
            const int x0 = int(std::floor(fx));
            const int y1 = std::min(y0 + 1, pooled_h - 1);
            const int x1 = std::min(x0 + 1, pooled_w - 1);
            const double wy = fy - double(y0);
            const double wx = fx - double(x0);
            const auto t00 = tokens.row(y0 * pooled_w + x0);
            const auto t01 = tokens.row(y0 * pooled_w + x1);
            const auto t10 = tokens.row(y1 * pooled_w + x0);
            const auto t11 = tokens.row(y1 * pooled_w + x1);
            out.data.col(pixel) = ((1.0 - wy) * ((1.0 - wx) * t00 + wx * t01) +
                                   wy * ((1.0 - wx) * t10 + wx * t11))
                                      .transpose();
        }
    }
    return out;
}

PmiOutput pmi_forward(const FeatureBlock& f_p, const FeatureBlock& f_m, const PmiWeights& weights,
                      const PmiConfig& config) {
    pmi_validate(config);
    if (f_p.channels != f_m.channels || f_p.height != f_m.height || f_p.width != f_m.width)
        fail(ErrorCode::dimension, "appearance and motion blocks differ in shape");
    if (f_p.channels != config.channels)
        fail(ErrorCode::dimension, "feature blocks do not match the configured channel count");

    const Eigen::MatrixXd tok_p = pool_tokens(f_p, config);
    const Eigen::MatrixXd tok_m = pool_tokens(f_m, config);

    const Eigen::MatrixXd inter_p = cross_attend(tok_p, tok_m, weights.p_from_m, config);
    const Eigen::MatrixXd inter_m = cross_attend(tok_m, tok_p, weights.m_from_p, config);

    const FeatureBlock up_p = upsample_tokens(inter_p, config.pooled_h, config.pooled_w,
                                              f_p.height, f_p.width, config.upsample);
    const FeatureBlock up_m = upsample_tokens(inter_m, config.pooled_h, config.pooled_w,
                                              f_m.height, f_m.width, config.upsample);

    PmiOutput out;
    out.p_out = feature_block(config.channels, f_p.height, f_p.width);
    out.m_out = feature_block(config.channels, f_m.height, f_m.width);
    out.p_out.data = f_p.data + weights.p_from_m.phi.transpose() * up_p.data;
    out.m_out.data = f_m.data + weights.m_from_p.phi.transpose() * up_m.data;

    Eigen::MatrixXd stacked(2 * config.channels, f_p.data.cols());
    stacked.topRows(config.channels) = out.p_out.data;
    stacked.bottomRows(config.channels) = out.m_out.data;
    out.fused = feature_block(config.channels, f_p.height, f_p.width);
    out.fused.data = weights.fuse.transpose() * stacked;
    return out;
}

}  // namespace retina
