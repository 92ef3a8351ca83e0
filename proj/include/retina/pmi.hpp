#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "retina/error.hpp"

namespace retina {

// C x H x W feature tensor stored as a (channels x pixels) matrix with
// row-major pixel indexing (p = y * width + x).
struct FeatureBlock {
    int channels = 0;
    int height = 0;
    int width = 0;
    Eigen::MatrixXd data;  // channels x (height * width)

    double& at(int c, int y, int x) { return data(c, y * width + x); }
    double at(int c, int y, int x) const { return data(c, y * width + x); }
};

FeatureBlock feature_block(int channels, int height, int width);

enum class Upsample { bilinear, nearest };

struct PmiConfig {
    int channels = 128;
    int heads = 8;
    int pooled_h = 20;
    int pooled_w = 20;
    int ffn_expansion = 4;
    double w_pool = 0.5;  // frozen stand-in for the learnable avg/max mix
    std::uint64_t seed = 0;
    Upsample upsample = Upsample::bilinear;

    int head_dim() const { return channels / heads; }
    int tokens() const { return pooled_h * pooled_w; }
};

void pmi_validate(const PmiConfig& config);

// All projection matrices are stored (in_features x out_features) and applied
// as X_out = X_in * W on row-token matrices. Layer-norm affine parameters are
// identity (scale 1, offset 0); everything else is drawn uniformly from
// [-1/sqrt(C), 1/sqrt(C)] in a fixed fill order, so a seed regenerates the
// weights bitwise.
struct PmiWeights {
    struct Direction {
        Eigen::MatrixXd wq, wk, wv, wo;        // C x C
        Eigen::MatrixXd ffn_w1;                // C x (expansion*C)
        Eigen::MatrixXd ffn_w2;                // (expansion*C) x C
        Eigen::MatrixXd phi;                   // C x C interaction back-projection
        Eigen::VectorXd ln1_scale, ln1_offset; // C
        Eigen::VectorXd ln2_scale, ln2_offset; // C
    };
    Direction p_from_m;  // appearance queries attend to motion keys/values
    Direction m_from_p;  // motion queries attend to appearance keys/values
    Eigen::MatrixXd fuse;  // 2C x C concatenate-project fusion

    static PmiWeights seeded(const PmiConfig& config);
};

// Fixed 2D sinusoidal positional embeddings, C/2 coefficients per axis
// (columns [0, C/2) encode x, [C/2, C) encode y).
Eigen::MatrixXd positional_embeddings(const PmiConfig& config);

// Adaptive average and max pooling to (pooled_h, pooled_w) with bins spanning
// [floor(i*H/out), ceil((i+1)*H/out)), blended w_pool*avg + (1-w_pool)*max,
// flattened row-major into a (tokens x C) matrix, positional embeddings added.
Eigen::MatrixXd pool_tokens(const FeatureBlock& block, const PmiConfig& config);

// Post-norm transformer layer-norm over the feature dimension, epsilon 1e-5.
Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& tokens, const Eigen::VectorXd& scale,
                           const Eigen::VectorXd& offset);

// Multi-head scaled dot-product attention (scale 1/sqrt(d_k), per-row softmax
// over key positions, heads concatenated, output-projected). Optionally
// reports the per-head attention matrices.
Eigen::MatrixXd multi_head_attention(const Eigen::MatrixXd& queries_from,
                                     const Eigen::MatrixXd& keys_values_from,
                                     const PmiWeights::Direction& dir, const PmiConfig& config,
                                     std::vector<Eigen::MatrixXd>* attention = nullptr);

// One cross-attention direction: attention and a ReLU FFN (expansion factor
// from the config), each sublayer with a residual connection followed by layer
// normalization (post-norm).
Eigen::MatrixXd cross_attend(const Eigen::MatrixXd& queries_from,
                             const Eigen::MatrixXd& keys_values_from,
                             const PmiWeights::Direction& dir, const PmiConfig& config,
                             std::vector<Eigen::MatrixXd>* attention = nullptr);

// Token grid back to pixel resolution (bilinear uses the half-pixel-center
// convention; nearest uses floor(dst * src/dst)).
FeatureBlock upsample_tokens(const Eigen::MatrixXd& tokens, int pooled_h, int pooled_w,
                             int out_h, int out_w, Upsample mode);

struct PmiOutput {
    FeatureBlock p_out;   // appearance pathway with residual interaction added
    FeatureBlock m_out;   // motion pathway with residual interaction added
    FeatureBlock fused;   // concatenate-project output, back to C channels
};

// Full forward pass: pool both pathways, run both attention directions,
// upsample, apply the back-projections, add residually, and fuse.
PmiOutput pmi_forward(const FeatureBlock& f_p, const FeatureBlock& f_m, const PmiWeights& weights,
                      const PmiConfig& config);

}  // namespace retina
