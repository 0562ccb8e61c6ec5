#include "mtag/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace mtag {

void TrainOptions::validate() const {
    if (max_epochs == 0) {
        throw Error("max_epochs must be positive");
    }
    if (batch_size == 0) {
        throw Error("batch_size must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw Error("learning_rate must be positive");
    }
    if (patience.has_value() && *patience == 0) {
        throw Error("patience must be positive when set");
    }
}

namespace {

void check_examples(const ModelConfig& config, std::span<const TrainingExample> examples,
                    const char* which) {
    for (const auto& ex : examples) {
        for (std::size_t idx : ex.input_indices) {
            if (idx >= config.input_vocab_size) {
                throw VocabMismatch(std::string(which) +
                                    " set carries an input index outside the vocabulary");
            }
        }
        if (ex.target_index >= config.output_vocab_size) {
            throw VocabMismatch(std::string(which) +
                                " set carries a target index outside the vocabulary");
        }
    }
}

void accumulate(ModelParams& acc, const ModelParams& g) {
    auto at = acc.tensors();
    auto gt = g.tensors();
    for (std::size_t k = 0; k < at.size(); ++k) {
        Eigen::Map<Eigen::ArrayXd>(at[k].data, at[k].size()) +=
            Eigen::Map<const Eigen::ArrayXd>(gt[k].data, gt[k].size());
    }
}

void scale(ModelParams& p, double s) {
    for (auto& t : p.tensors()) {
        Eigen::Map<Eigen::ArrayXd>(t.data, t.size()) *= s;
    }
}

struct SetMetrics {
    double mean_ce = 0.0;
    double accuracy = 0.0;
};

SetMetrics eval_set(const ModelParams& params, const ModelConfig& config,
                    std::span<const TrainingExample> examples) {
    double ce = 0.0;
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        const Vector probs = forward(params, config, ex.input_indices, RunMode::infer);
        ce += -std::log(probs[static_cast<Eigen::Index>(ex.target_index)]);
        std::size_t arg = 0;
        for (Eigen::Index k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[static_cast<Eigen::Index>(arg)]) {
                arg = static_cast<std::size_t>(k);
            }
        }
        if (arg == ex.target_index) {
            ++correct;
        }
    }
    const double n = static_cast<double>(examples.size());
    return SetMetrics{ce / n, static_cast<double>(correct) / n};
}

void log_line(std::ostream* log, std::size_t epoch, const EpochStats& s) {
    if (log == nullptr) {
        return;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", epoch, s.train_loss,
                  s.train_accuracy, s.valid_loss, s.valid_accuracy);
    *log << buf;
    log->flush();
}

}  // namespace

TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, std::ostream* progress_log) {
    config.validate();
    options.validate();
    if (train_set.empty() || valid_set.empty()) {
        throw EmptyDataset("training and validation sets must both be non-empty");
    }
    check_examples(config, train_set, "train");
    check_examples(config, valid_set, "validation");

    ModelParams params = init_params(config);
    AdamState adam = init_adam(config);
    Rng loop_rng(derive_seed(options.seed, 17));

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    double best_loss = std::numeric_limits<double>::infinity();
    ModelParams best_params = params;
    std::size_t best_epoch = 0;
    std::size_t epochs_since_improvement = 0;

    for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
        loop_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t group_n = std::min(options.batch_size, order.size() - start);
            ModelParams grads = zeros_like(config);
            for (std::size_t j = 0; j < group_n; ++j) {
                const TrainingExample& ex = train_set[order[start + j]];
                ForwardCache cache;
                forward(params, config, ex.input_indices, RunMode::train, &loop_rng, &cache);
                accumulate(grads, backward(cache, ex.target_index));
            }
            if (group_n > 1) {
                scale(grads, 1.0 / static_cast<double>(group_n));
            }
            adam_step(params, grads, adam, options.learning_rate);
        }

        const SetMetrics on_train = eval_set(params, config, train_set);
        const SetMetrics on_valid = eval_set(params, config, valid_set);
        EpochStats stats;
        stats.train_loss = on_train.mean_ce;
        stats.train_accuracy = on_train.accuracy;
        stats.valid_loss =
            on_valid.mean_ce + (options.decay_in_valid_loss ? l2_penalty(params, config) : 0.0);
        stats.valid_accuracy = on_valid.accuracy;
        history.epochs.push_back(stats);
        log_line(progress_log, epoch, stats);

        if (stats.valid_loss < best_loss) {
            best_loss = stats.valid_loss;
            best_params = params;
            best_epoch = epoch;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
        }
        if (options.patience.has_value() && epochs_since_improvement >= *options.patience) {
            break;
        }
    }

    history.best_epoch = best_epoch;
    return TrainResult{std::move(best_params), std::move(history)};
}

double accuracy(const ModelParams& params, const ModelConfig& config,
                std::span<const TrainingExample> examples) {
    if (examples.empty()) {
        throw EmptyDataset("accuracy over an empty example set");
    }
    check_examples(config, examples, "evaluation");
    return eval_set(params, config, examples).accuracy;
}

double mean_cross_entropy(const ModelParams& params, const ModelConfig& config,
                          std::span<const TrainingExample> examples) {
    if (examples.empty()) {
        throw EmptyDataset("cross-entropy over an empty example set");
    }
    check_examples(config, examples, "evaluation");
    return eval_set(params, config, examples).mean_ce;
}

std::size_t best_epoch_of(std::span<const double> valid_losses) {
    if (valid_losses.empty()) {
        throw EmptyDataset("no epochs recorded");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < valid_losses.size(); ++i) {
        if (valid_losses[i] < valid_losses[best]) {
            best = i;
        }
    }
    return best + 1;
}

void write_history(std::ostream& out, const TrainHistory& history) {
    out << "epoch\ttrain_loss\ttrain_accuracy\tvalid_loss\tvalid_accuracy\n";
    char buf[160];
    for (std::size_t i = 0; i < history.epochs.size(); ++i) {
        const EpochStats& s = history.epochs[i];
        std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", i + 1, s.train_loss,
                      s.train_accuracy, s.valid_loss, s.valid_accuracy);
        out << buf;
    }
    out << "# best_epoch\t" << history.best_epoch << '\n';
}

}  // namespace mtag
