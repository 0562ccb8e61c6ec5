#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtag/errors.hpp"
#include "mtag/rng.hpp"

namespace mtag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bidirectional LSTM tag classifier: embedding -> stacked bidirectional LSTM
// layers -> [forward state at the last position ∥ backward state at the
// first] -> fully-connected + ReLU -> softmax. All math is double precision
// and every stochastic choice is driven by an explicit Rng, so identical
// seeds give bitwise-identical runs.
struct ModelConfig {
    std::size_t input_vocab_size = 0;
    std::size_t output_vocab_size = 0;
    std::size_t embedding_dim = 32;
    std::size_t recurrent_layers = 2;
    std::size_t hidden_per_direction = 64;
    double dropout_recurrent = 0.2;  // after each recurrent layer
    std::size_t fc_units = 128;
    double dropout_fc = 0.5;
    double weight_decay = 0.0005;  // L2 on the FC and softmax weight matrices
    std::uint64_t seed = 0;

    void validate() const;  // InvalidConfig
    std::size_t classifier_input() const { return 2 * hidden_per_direction; }
    std::size_t layer_input(std::size_t layer) const {
        return layer == 0 ? embedding_dim : 2 * hidden_per_direction;
    }
};

// w_in: [layer input x hidden], w_rec: [hidden x hidden], bias: [hidden].
struct GateParams {
    Matrix w_in;
    Matrix w_rec;
    Vector bias;
};

struct DirectionParams {
    GateParams input, forget, cell, output;
};

struct LayerParams {
    DirectionParams fwd, bwd;
};

struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    Eigen::Index size() const { return rows * cols; }
};

struct TensorCRef {
    std::string name;
    const double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    Eigen::Index size() const { return rows * cols; }
};

// Also the shape family for gradients and Adam moments. Params are never
// mutated by inference, so one instance can serve concurrent predict calls;
// training mutates them and is single-threaded.
struct ModelParams {
    Matrix embedding;  // [input_vocab_size x embedding_dim]
    std::vector<LayerParams> layers;
    Matrix fc_weights;  // [2*hidden x fc_units]
    Vector fc_bias;
    Matrix out_weights;  // [fc_units x output_vocab_size]
    Vector out_bias;

    // Bumped on every optimizer step; lets backward() reject caches computed
    // against earlier parameter values.
    std::uint64_t revision = 0;

    // Fixed deterministic enumeration of every trainable tensor. Data is laid
    // out column-major (Eigen default).
    std::vector<TensorRef> tensors();
    std::vector<TensorCRef> tensors() const;
    std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases except LSTM forget gates at 1.0.
// Deterministic in config.seed.
ModelParams init_params(const ModelConfig& config);
ModelParams zeros_like(const ModelConfig& config);
std::size_t parameter_count(const ModelConfig& config);

enum class RunMode { train, infer };

// Keep-scale dropout masks (entries 0 or 1/(1-p)). recurrent[l] holds one
// vector of width 2*hidden per position for every layer that feeds another
// recurrent layer; for the last layer it holds a single vector masking the
// concatenated summary the classifier reads. fc masks the FC activations.
struct DropoutMasks {
    std::vector<std::vector<Vector>> recurrent;
    Vector fc;
};

namespace detail {

struct StepCache {
    Vector i, f, g, o, c, tanh_c, h;
};

struct DirectionCache {
    std::vector<StepCache> steps;  // indexed by absolute position
};

struct LayerCache {
    std::vector<Vector> inputs;  // layer input per position
    DirectionCache fwd, bwd;
    std::vector<Vector> drop_masks;  // per position; layers below the last only
};

}  // namespace detail

struct ForwardCache {
    ModelConfig config;
    RunMode mode = RunMode::infer;
    const ModelParams* params = nullptr;
    std::uint64_t params_revision = 0;
    std::vector<std::size_t> input;
    std::vector<detail::LayerCache> layers;
    Vector summary;  // [fwd state at position T ∥ bwd state at position 1]
    Vector summary_mask;
    Vector summary_dropped;
    Vector fc_pre;
    Vector fc_relu;
    Vector fc_mask;
    Vector fc_dropped;
    Vector logits;
    Vector probs;
};

// Runs the network over one tag-index sequence and returns the softmax
// distribution. Train mode applies inverted dropout, sampling masks from rng
// unless fixed_masks pins them (finite-difference checks); infer mode is a
// pure function of (params, input). Throws EmptySequence / IndexOutOfVocab.
Vector forward(const ModelParams& params, const ModelConfig& config,
               std::span<const std::size_t> input, RunMode mode, Rng* rng = nullptr,
               ForwardCache* cache = nullptr, const DropoutMasks* fixed_masks = nullptr);

// (weight_decay / 2) * (|fc_weights|^2 + |out_weights|^2); biases excluded.
double l2_penalty(const ModelParams& params, const ModelConfig& config);

// Cross-entropy -log p[target] plus the L2 penalty.
double loss(const Vector& probabilities, std::size_t target_index, const ModelParams& params,
            const ModelConfig& config);

// Exact gradients of loss() w.r.t. every parameter, backpropagated through
// both directions of every layer down to the embedding, for the dropout
// masks recorded in the cache. The cache borrows the params passed to
// forward; they must still be alive and on the same revision (StaleCache
// otherwise, and optimizer steps bump the revision).
ModelParams backward(const ForwardCache& cache, std::size_t target_index);

// Copies the masks a train-mode forward drew, for replaying.
DropoutMasks masks_from_cache(const ForwardCache& cache);

inline constexpr double kAdamLearningRate = 0.001;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct AdamState {
    ModelParams m;  // first moments
    ModelParams v;  // second moments
    std::int64_t t = 0;
};

AdamState init_adam(const ModelConfig& config);

// Standard Adam with bias correction. Bumps params.revision.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double learning_rate = kAdamLearningRate, double beta1 = kAdamBeta1,
               double beta2 = kAdamBeta2, double epsilon = kAdamEpsilon);

struct Prediction {
    std::size_t index = 0;  // argmax, ties to the smallest index
    Vector probabilities;
};

Prediction predict(const ModelParams& params, const ModelConfig& config,
                   std::span<const std::size_t> input);

// Model container: "MTAG" magic, u16 version, config block, vocabulary
// fingerprints, tensors as (rows, cols, column-major f64 payload), trailing
// FNV-1a checksum of everything before it. All integers and floats
// little-endian.
inline constexpr std::uint16_t kModelFormatVersion = 1;

void save_model(std::ostream& out, const ModelParams& params, const ModelConfig& config,
                std::uint64_t input_vocab_fingerprint, std::uint64_t output_vocab_fingerprint);

struct ModelFile {
    ModelParams params;
    ModelConfig config;
    std::uint64_t input_vocab_fingerprint = 0;
    std::uint64_t output_vocab_fingerprint = 0;
};

ModelFile load_model(std::istream& in);

// VocabMismatch unless both fingerprints agree with the container's.
void require_vocab_match(const ModelFile& file, std::uint64_t input_vocab_fingerprint,
                         std::uint64_t output_vocab_fingerprint);

// Central finite differences of loss() against backward() for one example,
// dropout masks frozen. rel error = |a - n| / max(|a| + |n|, 1e-3).
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    Eigen::Index worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

GradCheckResult gradient_check(const ModelConfig& config, std::span<const std::size_t> input,
                               std::size_t target, std::uint64_t seed, double fd_epsilon = 1e-5);

// Randomized tiny-config sweep (vocab <= 10, embedding <= 4, hidden <= 5,
// 1-2 layers, sequence length 1-8). One result per config.
std::vector<GradCheckResult> gradcheck_suite(std::size_t n_configs, std::uint64_t seed,
                                             double fd_epsilon = 1e-5);

}  // namespace mtag
