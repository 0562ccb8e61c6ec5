#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/nn.hpp"

namespace mtag {

struct TrainOptions {
    std::size_t max_epochs = 1;
    std::size_t batch_size = 32;  // gradient-accumulation group size
    double learning_rate = kAdamLearningRate;
    std::uint64_t seed = 0;
    std::optional<std::size_t> patience;  // stop after N epochs without improvement
    // Reported losses are pure mean cross-entropy by default so model
    // selection tracks predictive fit; the L2 penalty still drives the
    // optimizer either way.
    bool decay_in_valid_loss = false;

    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double valid_loss = 0.0;
    double valid_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;  // 1-based; argmin of valid_loss, earliest on ties
};

struct TrainResult {
    ModelParams best_params;  // snapshot from best_epoch, never simply the last
    TrainHistory history;
};

// Epoch loop: seeded shuffle, gradient averaging over accumulation groups,
// one Adam step per group, infer-mode metrics after each epoch. Bitwise
// deterministic in (config, options, data). progress_log, when given, gets
// one epoch<TAB>train_loss<TAB>train_acc<TAB>valid_loss<TAB>valid_acc line
// per epoch.
TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set,
                  std::ostream* progress_log = nullptr);

// Fraction of examples whose argmax prediction equals the target.
double accuracy(const ModelParams& params, const ModelConfig& config,
                std::span<const TrainingExample> examples);

// Mean -log p[target] in infer mode.
double mean_cross_entropy(const ModelParams& params, const ModelConfig& config,
                          std::span<const TrainingExample> examples);

// Earliest index (1-based) of the smallest value.
std::size_t best_epoch_of(std::span<const double> valid_losses);

// Same column layout as the progress log, with a header line and a trailing
// best-epoch comment.
void write_history(std::ostream& out, const TrainHistory& history);

}  // namespace mtag
