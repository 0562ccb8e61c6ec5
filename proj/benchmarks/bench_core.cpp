#include <benchmark/benchmark.h>

#include <sstream>
#include <vector>

#include <mtag/corpus.hpp>
#include <mtag/nn.hpp>
#include <mtag/synth.hpp>
#include <mtag/train.hpp>

namespace {

mtag::ModelConfig default_config(std::size_t input_vocab, std::size_t output_vocab) {
    mtag::ModelConfig config;
    config.input_vocab_size = input_vocab;
    config.output_vocab_size = output_vocab;
    config.seed = 3;
    return config;
}

std::vector<std::size_t> sequence(std::size_t length, std::size_t vocab) {
    mtag::Rng rng(17);
    std::vector<std::size_t> input(length);
    for (auto& idx : input) {
        idx = rng.below(vocab);
    }
    input[length / 2] = 0;
    return input;
}

void BM_forward_infer(benchmark::State& state) {
    const auto config = default_config(950, 257);
    const auto params = mtag::init_params(config);
    const auto input = sequence(static_cast<std::size_t>(state.range(0)), 950);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            mtag::forward(params, config, input, mtag::RunMode::infer));
    }
}
BENCHMARK(BM_forward_infer)->Arg(8)->Arg(16)->Arg(30);

void BM_forward_backward(benchmark::State& state) {
    const auto config = default_config(950, 257);
    const auto params = mtag::init_params(config);
    const auto input = sequence(static_cast<std::size_t>(state.range(0)), 950);
    mtag::Rng rng(5);
    for (auto _ : state) {
        mtag::ForwardCache cache;
        mtag::forward(params, config, input, mtag::RunMode::train, &rng, &cache);
        benchmark::DoNotOptimize(mtag::backward(cache, 7));
    }
}
BENCHMARK(BM_forward_backward)->Arg(8)->Arg(16)->Arg(30);

void BM_adam_step(benchmark::State& state) {
    const auto config = default_config(950, 257);
    auto params = mtag::init_params(config);
    const auto grads = mtag::zeros_like(config);
    auto adam = mtag::init_adam(config);
    for (auto _ : state) {
        mtag::adam_step(params, grads, adam);
    }
}
BENCHMARK(BM_adam_step);

void BM_read_corpus(benchmark::State& state) {
    mtag::GrammarSpec spec = mtag::GrammarSpec::default_spec();
    const auto corpus = mtag::generate_corpus(spec, static_cast<std::size_t>(state.range(0)));
    std::ostringstream buffer;
    mtag::write_corpus(buffer, corpus.sentences);
    const std::string text = buffer.str();
    for (auto _ : state) {
        std::istringstream in(text);
        benchmark::DoNotOptimize(mtag::read_corpus(in, mtag::Strictness::strict));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_read_corpus)->Arg(1000);

void BM_generate_examples(benchmark::State& state) {
    mtag::GrammarSpec spec = mtag::GrammarSpec::default_spec();
    const auto corpus = mtag::generate_corpus(spec, 2000);
    std::istringstream dict_in(corpus.morphdict_source);
    std::istringstream abbrev_in(corpus.abbrev_table_source);
    const auto dict = mtag::MorphDict::read(dict_in);
    const auto abbrevs = mtag::AbbrevTable::read(abbrev_in);
    const auto counts = mtag::collect_tag_counts(corpus.sentences, abbrevs, dict, 30);
    const auto input_vocab = mtag::TagVocab::build(counts.input, mtag::VocabKind::input);
    const auto output_vocab = mtag::TagVocab::build(counts.output, mtag::VocabKind::output);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mtag::generate_examples(corpus.sentences, abbrevs, dict,
                                                         input_vocab, output_vocab, 30));
    }
}
BENCHMARK(BM_generate_examples);

}  // namespace

BENCHMARK_MAIN();
