#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <mtag/synth.hpp>
#include <mtag/train.hpp>

#include "support.hpp"

using namespace mtag;

namespace {

struct Fixture {
    std::vector<TrainingExample> examples;
    TagVocab input_vocab;
    TagVocab output_vocab;
};

Fixture synth_examples(std::uint64_t seed, std::size_t n_sentences) {
    GrammarSpec spec = GrammarSpec::default_spec();
    spec.seed = seed;
    const SynthCorpus corpus = generate_corpus(spec, n_sentences);
    std::istringstream dict_in(corpus.morphdict_source);
    std::istringstream abbrev_in(corpus.abbrev_table_source);
    const MorphDict dict = MorphDict::read(dict_in);
    const AbbrevTable table = AbbrevTable::read(abbrev_in);
    const TagCounts counts = collect_tag_counts(corpus.sentences, table, dict, 30);
    TagVocab input_vocab = TagVocab::build(counts.input, VocabKind::input);
    TagVocab output_vocab = TagVocab::build(counts.output, VocabKind::output);
    auto examples = generate_examples(corpus.sentences, table, dict, input_vocab, output_vocab, 30);
    return Fixture{std::move(examples), std::move(input_vocab), std::move(output_vocab)};
}

ModelConfig small_config(const Fixture& fixture, std::uint64_t seed = 3) {
    ModelConfig config;
    config.input_vocab_size = fixture.input_vocab.size();
    config.output_vocab_size = fixture.output_vocab.size();
    config.embedding_dim = 8;
    config.recurrent_layers = 1;
    config.hidden_per_direction = 16;
    config.fc_units = 16;
    config.seed = seed;
    return config;
}

bool histories_identical(const TrainHistory& a, const TrainHistory& b) {
    if (a.best_epoch != b.best_epoch || a.epochs.size() != b.epochs.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        if (a.epochs[i].train_loss != b.epochs[i].train_loss ||
            a.epochs[i].train_accuracy != b.epochs[i].train_accuracy ||
            a.epochs[i].valid_loss != b.epochs[i].valid_loss ||
            a.epochs[i].valid_accuracy != b.epochs[i].valid_accuracy) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("best_epoch_of picks the earliest minimum, 1-based") {
    const std::vector<double> trace{0.9, 0.5, 0.7};
    CHECK(best_epoch_of(trace) == 2);
    const std::vector<double> tie{0.5, 0.5, 0.6};
    CHECK(best_epoch_of(tie) == 1);
    CHECK_THROWS_AS(best_epoch_of(std::vector<double>{}), EmptyDataset);
}

TEST_CASE("train is bitwise deterministic") {
    const Fixture fixture = synth_examples(21, 120);
    auto [train_set, valid_set] = split_train_validation(fixture.examples, 0.2, 9);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 3;
    options.seed = 5;

    const TrainResult a = train(config, options, train_set, valid_set);
    const TrainResult b = train(config, options, train_set, valid_set);
    CHECK(histories_identical(a.history, b.history));
    const auto at = a.best_params.tensors();
    const auto bt = b.best_params.tensors();
    for (std::size_t k = 0; k < at.size(); ++k) {
        for (Eigen::Index e = 0; e < at[k].size(); ++e) {
            CHECK(at[k].data[e] == bt[k].data[e]);
        }
    }
}

TEST_CASE("returned params are the best-epoch snapshot") {
    const Fixture fixture = synth_examples(22, 150);
    auto [train_set, valid_set] = split_train_validation(fixture.examples, 0.2, 9);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 4;
    options.seed = 5;

    const TrainResult result = train(config, options, train_set, valid_set);
    REQUIRE(result.history.epochs.size() == 4);

    std::vector<double> losses;
    for (const auto& e : result.history.epochs) {
        losses.push_back(e.valid_loss);
    }
    CHECK(result.history.best_epoch == best_epoch_of(losses));

    // re-evaluating the returned snapshot reproduces the recorded minimum
    const double recomputed = mean_cross_entropy(result.best_params, config, valid_set);
    CHECK(recomputed ==
          doctest::Approx(result.history.epochs[result.history.best_epoch - 1].valid_loss)
              .epsilon(1e-12));
}

TEST_CASE("a small model memorizes a small example set") {
    Fixture fixture = synth_examples(23, 120);
    fixture.examples.resize(30);
    ModelConfig config = small_config(fixture);
    config.dropout_recurrent = 0.0;  // memorization, not regularization
    config.dropout_fc = 0.0;
    config.weight_decay = 0.0;
    TrainOptions options;
    options.max_epochs = 100;
    options.batch_size = 4;
    options.seed = 2;
    const TrainResult result =
        train(config, options, fixture.examples, fixture.examples);
    CHECK(result.history.epochs.back().train_accuracy >= 0.95);
}

TEST_CASE("accuracy matches a brute-force recount") {
    const Fixture fixture = synth_examples(24, 100);
    const ModelConfig config = small_config(fixture);
    const ModelParams params = init_params(config);
    const double reported = accuracy(params, config, fixture.examples);
    std::size_t correct = 0;
    for (const auto& ex : fixture.examples) {
        if (predict(params, config, ex.input_indices).index == ex.target_index) {
            ++correct;
        }
    }
    CHECK(reported ==
          doctest::Approx(static_cast<double>(correct) / fixture.examples.size()).epsilon(1e-15));
}

TEST_CASE("accuracy endpoints: constant predictor and perfect model") {
    Fixture fixture = synth_examples(25, 80);
    const ModelConfig config = small_config(fixture);

    // all-zero params predict index 0 everywhere
    const ModelParams flat = zeros_like(config);
    std::vector<TrainingExample> not_zero;
    for (const auto& ex : fixture.examples) {
        if (ex.target_index != 0) {
            not_zero.push_back(ex);
        }
    }
    REQUIRE(!not_zero.empty());
    CHECK(accuracy(flat, config, not_zero) == 0.0);

    fixture.examples.resize(20);
    ModelConfig overfit = config;
    overfit.dropout_recurrent = 0.0;
    overfit.dropout_fc = 0.0;
    overfit.weight_decay = 0.0;
    TrainOptions options;
    options.max_epochs = 80;
    options.batch_size = 4;
    options.seed = 6;
    const TrainResult result = train(overfit, options, fixture.examples, fixture.examples);
    if (result.history.epochs.back().train_accuracy == 1.0) {
        CHECK(accuracy(result.best_params, overfit, fixture.examples) == 1.0);
    }
}

TEST_CASE("train input validation") {
    const Fixture fixture = synth_examples(26, 60);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 1;

    CHECK_THROWS_AS(train(config, options, {}, fixture.examples), EmptyDataset);
    CHECK_THROWS_AS(train(config, options, fixture.examples, {}), EmptyDataset);
    CHECK_THROWS_AS(accuracy(init_params(config), config, {}), EmptyDataset);

    ModelConfig narrow = config;
    narrow.input_vocab_size = 2;
    CHECK_THROWS_AS(train(narrow, options, fixture.examples, fixture.examples), VocabMismatch);
    ModelConfig few_outputs = config;
    few_outputs.output_vocab_size = 1;
    CHECK_THROWS_AS(train(few_outputs, options, fixture.examples, fixture.examples),
                    VocabMismatch);

    TrainOptions bad = options;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(config, bad, fixture.examples, fixture.examples), Error);
}

TEST_CASE("a group of size one is a plain per-example step") {
    const Fixture fixture = synth_examples(27, 60);
    std::vector<TrainingExample> one{fixture.examples.at(0)};
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 1;
    options.batch_size = 1;
    options.seed = 14;
    const TrainResult via_train = train(config, options, one, one);

    // replay the loop by hand: one shuffle of a singleton draws nothing,
    // then forward/backward/adam on the single example
    ModelParams params = init_params(config);
    AdamState adam = init_adam(config);
    Rng loop_rng(derive_seed(options.seed, 17));
    std::vector<std::size_t> order{0};
    loop_rng.shuffle(order);
    ForwardCache cache;
    forward(params, config, one[0].input_indices, RunMode::train, &loop_rng, &cache);
    adam_step(params, backward(cache, one[0].target_index), adam, options.learning_rate);

    const auto at = via_train.best_params.tensors();
    const auto bt = params.tensors();
    for (std::size_t k = 0; k < at.size(); ++k) {
        for (Eigen::Index e = 0; e < at[k].size(); ++e) {
            CHECK(at[k].data[e] == bt[k].data[e]);
        }
    }
}

TEST_CASE("patience stops a stalled run") {
    const Fixture fixture = synth_examples(28, 80);
    auto [train_set, valid_set] = split_train_validation(fixture.examples, 0.25, 9);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 10;
    options.seed = 5;
    options.learning_rate = 1e-13;  // nothing moves, so nothing improves
    options.patience = 2;
    const TrainResult result = train(config, options, train_set, valid_set);
    CHECK(result.history.epochs.size() == 3);  // epoch 1 improves on +inf, then 2 stalls
    CHECK(result.history.best_epoch == 1);

    TrainOptions no_patience = options;
    no_patience.patience.reset();
    no_patience.max_epochs = 4;
    const TrainResult full = train(config, no_patience, train_set, valid_set);
    CHECK(full.history.epochs.size() == 4);
}

TEST_CASE("progress log and history share the documented layout") {
    const Fixture fixture = synth_examples(29, 60);
    auto [train_set, valid_set] = split_train_validation(fixture.examples, 0.25, 9);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 2;
    options.seed = 5;
    std::ostringstream log;
    const TrainResult result = train(config, options, train_set, valid_set, &log);

    const auto log_lines = testsupport::lines_of(log.str());
    REQUIRE(log_lines.size() == 2);
    CHECK(log_lines[0].substr(0, 2) == "1\t");
    CHECK(std::count(log_lines[0].begin(), log_lines[0].end(), '\t') == 4);

    std::ostringstream history;
    write_history(history, result.history);
    const auto history_lines = testsupport::lines_of(history.str());
    REQUIRE(history_lines.size() == 4);  // header + 2 epochs + best marker
    CHECK(history_lines[0] == "epoch\ttrain_loss\ttrain_accuracy\tvalid_loss\tvalid_accuracy");
    CHECK(history_lines[1] == log_lines[0]);
    CHECK(history_lines[3] ==
          "# best_epoch\t" + std::to_string(result.history.best_epoch));
}

TEST_CASE("swapping two context tags changes a trained model's output") {
    Fixture fixture = synth_examples(30, 400);
    auto [train_set, valid_set] = split_train_validation(fixture.examples, 0.1, 3);
    const ModelConfig config = small_config(fixture);
    TrainOptions options;
    options.max_epochs = 3;
    options.seed = 8;
    const TrainResult result = train(config, options, train_set, valid_set);

    bool any_changed = false;
    for (const auto& ex : valid_set) {
        if (ex.input_indices.size() < 3 || any_changed) {
            break;
        }
        const Vector base =
            forward(result.best_params, config, ex.input_indices, RunMode::infer);
        for (std::size_t i = 0; i < ex.input_indices.size() && !any_changed; ++i) {
            for (std::size_t j = i + 1; j < ex.input_indices.size(); ++j) {
                if (i == ex.mask_position || j == ex.mask_position ||
                    ex.input_indices[i] == ex.input_indices[j]) {
                    continue;
                }
                auto permuted = ex.input_indices;
                std::swap(permuted[i], permuted[j]);
                const Vector swapped =
                    forward(result.best_params, config, permuted, RunMode::infer);
                if ((swapped - base).cwiseAbs().maxCoeff() > 1e-6) {
                    any_changed = true;
                    break;
                }
            }
        }
    }
    CHECK(any_changed);
}
