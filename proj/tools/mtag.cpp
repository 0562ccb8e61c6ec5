// mtag: tag-sequence classifier and abbreviation expander.
//
// Subcommands: synth, vocab, gen, train, eval, baseline, gradcheck, expand.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.
// Data goes to stdout or explicit --out paths; diagnostics go to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <mtag/corpus.hpp>
#include <mtag/errors.hpp>
#include <mtag/eval.hpp>
#include <mtag/morphdict.hpp>
#include <mtag/nn.hpp>
#include <mtag/synth.hpp>
#include <mtag/tag.hpp>
#include <mtag/train.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// config file: key=value lines, '#' comments; command-line flags win.

using ConfigMap = std::map<std::string, std::string>;

ConfigMap read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw mtag::IoError("cannot open config file '" + path + "'");
    }
    ConfigMap config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw mtag::ParseError("expected key=value", line_no);
        }
        config[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return config;
}

std::uint64_t config_u64(const ConfigMap& config, const std::string& key, std::uint64_t fallback) {
    auto it = config.find(key);
    if (it == config.end()) {
        return fallback;
    }
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw mtag::Error("config key '" + key + "' is not an integer");
    }
}

double config_f64(const ConfigMap& config, const std::string& key, double fallback) {
    auto it = config.find(key);
    if (it == config.end()) {
        return fallback;
    }
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw mtag::Error("config key '" + key + "' is not a number");
    }
}

// Binds flag storage to config keys so unset flags pick up file values.
struct ConfigBinder {
    struct Binding {
        CLI::Option* option;
        std::string key;
        std::function<void(const std::string&)> assign;
    };
    std::vector<Binding> bindings;

    void bind(CLI::Option* option, std::string key, std::string& value) {
        bindings.push_back(
            {option, std::move(key), [&value](const std::string& s) { value = s; }});
    }
    void bind(CLI::Option* option, std::string key, std::uint64_t& value) {
        bindings.push_back({option, std::move(key), [&value](const std::string& s) {
                                value = std::stoull(s);
                            }});
    }
    void bind(CLI::Option* option, std::string key, double& value) {
        bindings.push_back(
            {option, std::move(key), [&value](const std::string& s) { value = std::stod(s); }});
    }

    void apply(const ConfigMap& config) const {
        for (const auto& b : bindings) {
            if (b.option->count() > 0) {
                continue;  // flags win
            }
            auto it = config.find(b.key);
            if (it == config.end()) {
                continue;
            }
            try {
                b.assign(it->second);
            } catch (const std::exception&) {
                throw mtag::Error("config key '" + b.key + "' has a bad value '" + it->second +
                                  "'");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// io helpers

std::ifstream open_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw mtag::IoError("cannot open '" + path + "'");
    }
    return in;
}

// Writes to <path>.tmp, then renames; a failed run never clobbers outputs.
void write_atomic(const std::string& path, bool binary,
                  const std::function<void(std::ostream&)>& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
        if (!out) {
            throw mtag::IoError("cannot write '" + tmp + "'");
        }
        writer(out);
        out.flush();
        if (!out) {
            throw mtag::IoError("write failed for '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw mtag::IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

mtag::MorphDict load_dict(const std::string& path) {
    auto in = open_text(path);
    return mtag::MorphDict::read(in);
}

mtag::AbbrevTable load_abbrevs(const std::string& path) {
    auto in = open_text(path);
    return mtag::AbbrevTable::read(in);
}

mtag::TagVocab load_vocab(const std::string& path, mtag::VocabKind kind) {
    auto in = open_text(path);
    return mtag::TagVocab::read(in, kind);
}

std::vector<mtag::Sentence> load_corpus(const std::string& path, mtag::Strictness strictness,
                                        mtag::ReadReport* report = nullptr) {
    auto in = open_text(path);
    return mtag::read_corpus(in, strictness, report);
}

mtag::GrammarSpec load_grammar(const std::string& path) {
    if (path.empty()) {
        return mtag::GrammarSpec::default_spec();
    }
    auto in = open_text(path);
    return mtag::GrammarSpec::read(in);
}

void print_gen_report(const mtag::GenReport& report) {
    std::cerr << "sentences=" << report.sentences << " examples=" << report.examples
              << " skipped_long=" << report.long_sentences
              << " skipped_unknown_input_tag=" << report.unknown_input_tag_sentences
              << " skipped_unknown_target_tag=" << report.unknown_target_tag_sentences << '\n';
}

// Required values are checked after the config merge so a --config file can
// supply them; only then do missing ones become usage errors.
struct MissingOption : mtag::Error {
    using mtag::Error::Error;
};

void require_values(
    std::initializer_list<std::pair<const char*, const std::string*>> required) {
    for (const auto& [flag, value] : required) {
        if (value->empty()) {
            throw MissingOption(std::string("missing required option ") + flag);
        }
    }
}

// ---------------------------------------------------------------------------
// shared option bundle

struct Options {
    std::string corpus;
    std::string dict;
    std::string abbrevs;
    std::string input_vocab;
    std::string output_vocab;
    std::string model;
    std::string config;
    std::string out;
    std::string baseline;
    std::string schema;
    std::string grammar;
    std::uint64_t seed = 0;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double lr = mtag::kAdamLearningRate;
    std::size_t max_len = 30;
    double valid_fraction = 0.01;
    std::size_t sentences = 1000;
    bool lenient = false;

    ConfigMap file;  // parsed --config contents
};

struct Pipeline {
    mtag::MorphDict dict;
    mtag::AbbrevTable abbrevs;
    mtag::TagVocab input_vocab;
    mtag::TagVocab output_vocab;
};

Pipeline load_pipeline(const Options& opt) {
    return Pipeline{load_dict(opt.dict), load_abbrevs(opt.abbrevs),
                    load_vocab(opt.input_vocab, mtag::VocabKind::input),
                    load_vocab(opt.output_vocab, mtag::VocabKind::output)};
}

std::vector<mtag::TrainingExample> make_examples(const Options& opt, const Pipeline& p,
                                                 const std::string& corpus_path,
                                                 mtag::GenReport* report) {
    mtag::ReadReport read_report;
    auto sentences = load_corpus(
        corpus_path, opt.lenient ? mtag::Strictness::lenient : mtag::Strictness::strict,
        &read_report);
    if (read_report.malformed_lines > 0) {
        std::cerr << "skipped " << read_report.malformed_lines << " malformed corpus lines\n";
    }
    return mtag::generate_examples(sentences, p.abbrevs, p.dict, p.input_vocab, p.output_vocab,
                                   opt.max_len, report);
}

// ---------------------------------------------------------------------------
// commands

int cmd_synth(const Options& opt) {
    require_values({{"--out", &opt.out}});
    mtag::GrammarSpec spec = load_grammar(opt.grammar);
    if (opt.seed != 0) {
        spec.seed = opt.seed;
    }
    const mtag::SynthCorpus corpus = mtag::generate_corpus(spec, opt.sentences);
    const std::string corpus_path = opt.out + ".corpus.tsv";
    const std::string dict_path = opt.out + ".dict.tsv";
    const std::string abbrev_path = opt.out + ".abbrevs.tsv";
    write_atomic(corpus_path, false,
                 [&](std::ostream& o) { mtag::write_corpus(o, corpus.sentences); });
    write_atomic(dict_path, false, [&](std::ostream& o) { o << corpus.morphdict_source; });
    write_atomic(abbrev_path, false, [&](std::ostream& o) { o << corpus.abbrev_table_source; });
    std::cout << "sentences=" << corpus.sentences.size() << " corpus=" << corpus_path
              << " dict=" << dict_path << " abbrevs=" << abbrev_path << '\n';
    return kExitOk;
}

void require_data_values(const Options& opt, bool corpus_required = true) {
    if (corpus_required) {
        require_values({{"--corpus", &opt.corpus}});
    }
    require_values({{"--dict", &opt.dict},
                    {"--abbrevs", &opt.abbrevs},
                    {"--input-vocab", &opt.input_vocab},
                    {"--output-vocab", &opt.output_vocab}});
}

int cmd_vocab(const Options& opt) {
    require_data_values(opt);
    mtag::ReadReport read_report;
    auto sentences = load_corpus(
        opt.corpus, opt.lenient ? mtag::Strictness::lenient : mtag::Strictness::strict,
        &read_report);
    auto dict = load_dict(opt.dict);
    auto abbrevs = load_abbrevs(opt.abbrevs);
    const mtag::TagCounts counts = mtag::collect_tag_counts(sentences, abbrevs, dict, opt.max_len);
    const mtag::TagVocab input_vocab = mtag::TagVocab::build(counts.input, mtag::VocabKind::input);
    const mtag::TagVocab output_vocab =
        mtag::TagVocab::build(counts.output, mtag::VocabKind::output);
    write_atomic(opt.input_vocab, false, [&](std::ostream& o) { input_vocab.write(o); });
    write_atomic(opt.output_vocab, false, [&](std::ostream& o) { output_vocab.write(o); });
    std::cout << "input_vocab=" << input_vocab.size() << " output_vocab=" << output_vocab.size()
              << " sentences=" << sentences.size() << '\n';
    return kExitOk;
}

int cmd_gen(const Options& opt) {
    require_data_values(opt);
    require_values({{"--out", &opt.out}});
    const Pipeline p = load_pipeline(opt);
    mtag::GenReport report;
    const auto examples = make_examples(opt, p, opt.corpus, &report);
    write_atomic(opt.out, false, [&](std::ostream& o) {
        o << "# abbrev\tmask_position\ttarget_tag\tinput_tags\n";
        for (const auto& ex : examples) {
            o << ex.abbrev_id << '\t' << ex.mask_position << '\t'
              << p.output_vocab.decode(ex.target_index) << '\t';
            for (std::size_t i = 0; i < ex.input_indices.size(); ++i) {
                o << (i > 0 ? " " : "") << p.input_vocab.decode(ex.input_indices[i]);
            }
            o << '\n';
        }
    });
    print_gen_report(report);
    std::cout << "examples=" << examples.size() << " out=" << opt.out << '\n';
    return kExitOk;
}

mtag::ModelConfig model_config_from(const Options& opt, const Pipeline& p) {
    mtag::ModelConfig config;
    config.input_vocab_size = p.input_vocab.size();
    config.output_vocab_size = p.output_vocab.size();
    config.embedding_dim = config_u64(opt.file, "embedding_dim", config.embedding_dim);
    config.recurrent_layers = config_u64(opt.file, "recurrent_layers", config.recurrent_layers);
    config.hidden_per_direction =
        config_u64(opt.file, "hidden_per_direction", config.hidden_per_direction);
    config.dropout_recurrent = config_f64(opt.file, "dropout_recurrent", config.dropout_recurrent);
    config.fc_units = config_u64(opt.file, "fc_units", config.fc_units);
    config.dropout_fc = config_f64(opt.file, "dropout_fc", config.dropout_fc);
    config.weight_decay = config_f64(opt.file, "weight_decay", config.weight_decay);
    config.seed = opt.seed;
    return config;
}

int cmd_train(const Options& opt) {
    require_data_values(opt);
    require_values({{"--model", &opt.model}});
    const Pipeline p = load_pipeline(opt);
    mtag::GenReport report;
    auto examples = make_examples(opt, p, opt.corpus, &report);
    print_gen_report(report);
    if (examples.empty()) {
        throw mtag::EmptyDataset("no training examples were generated");
    }
    auto [train_set, valid_set] = mtag::split_train_validation(
        std::move(examples), opt.valid_fraction, mtag::derive_seed(opt.seed, 2));

    const mtag::ModelConfig config = model_config_from(opt, p);
    mtag::TrainOptions options;
    options.max_epochs = opt.epochs;
    options.batch_size = opt.batch_size;
    options.learning_rate = opt.lr;
    options.seed = opt.seed;
    const std::uint64_t patience = config_u64(opt.file, "patience", 0);
    if (patience > 0) {
        options.patience = patience;
    }
    options.decay_in_valid_loss = config_u64(opt.file, "decay_in_valid_loss", 0) != 0;

    const mtag::TrainResult result =
        mtag::train(config, options, train_set, valid_set, &std::cerr);

    write_atomic(opt.model, true, [&](std::ostream& o) {
        mtag::save_model(o, result.best_params, config, p.input_vocab.fingerprint(),
                         p.output_vocab.fingerprint());
    });
    const std::string history_path = opt.out.empty() ? opt.model + ".history.tsv" : opt.out;
    write_atomic(history_path, false,
                 [&](std::ostream& o) { mtag::write_history(o, result.history); });

    const auto& best = result.history.epochs.at(result.history.best_epoch - 1);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "trained epochs=%zu best_epoch=%zu valid_loss=%.6f valid_accuracy=%.6f "
                  "model=%s history=%s\n",
                  result.history.epochs.size(), result.history.best_epoch, best.valid_loss,
                  best.valid_accuracy, opt.model.c_str(), history_path.c_str());
    std::cout << buf;
    return kExitOk;
}

mtag::AttributeSchema load_schema(const Options& opt) {
    if (opt.schema.empty()) {
        return mtag::AttributeSchema::polish_default();
    }
    auto in = open_text(opt.schema);
    return mtag::AttributeSchema::read(in);
}

int cmd_eval(const Options& opt) {
    require_data_values(opt);
    if (opt.model.empty() == opt.baseline.empty()) {
        throw MissingOption("eval needs exactly one of --model or --baseline");
    }
    const Pipeline p = load_pipeline(opt);
    mtag::GenReport report;
    const auto examples = make_examples(opt, p, opt.corpus, &report);
    print_gen_report(report);
    const mtag::AttributeSchema schema = load_schema(opt);

    mtag::EvalReport eval_report;
    if (!opt.model.empty()) {
        std::ifstream in(opt.model, std::ios::binary);
        if (!in) {
            throw mtag::IoError("cannot open model '" + opt.model + "'");
        }
        const mtag::ModelFile file = mtag::load_model(in);
        mtag::require_vocab_match(file, p.input_vocab.fingerprint(),
                                  p.output_vocab.fingerprint());
        eval_report =
            mtag::evaluate_model(file.params, file.config, examples, p.output_vocab, schema);
    } else {
        auto in = open_text(opt.baseline);
        const mtag::BaselineModel baseline = mtag::BaselineModel::read(in);
        eval_report = mtag::evaluate_baseline(baseline, examples, p.output_vocab, schema);
    }

    mtag::write_report_text(std::cout, eval_report);
    if (!opt.out.empty()) {
        write_atomic(opt.out, false,
                     [&](std::ostream& o) { mtag::write_report_tsv(o, eval_report); });
    }
    return kExitOk;
}

int cmd_baseline(const Options& opt) {
    require_data_values(opt);
    require_values({{"--out", &opt.out}});
    const Pipeline p = load_pipeline(opt);
    mtag::GenReport report;
    const auto examples = make_examples(opt, p, opt.corpus, &report);
    print_gen_report(report);
    if (examples.empty()) {
        throw mtag::EmptyDataset("no examples to fit the baseline on");
    }
    const mtag::BaselineModel baseline = mtag::BaselineModel::fit(examples, p.output_vocab);
    write_atomic(opt.out, false, [&](std::ostream& o) { baseline.write(o); });
    const mtag::EvalReport self = mtag::evaluate_baseline(
        baseline, examples, p.output_vocab, mtag::AttributeSchema::polish_default());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "baseline abbreviations=%zu train_accuracy=%.6f out=%s\n",
                  baseline.modal_tag.size(), self.accuracy, opt.out.c_str());
    std::cout << buf;
    return kExitOk;
}

int cmd_gradcheck(const Options& opt) {
    const std::size_t trials = config_u64(opt.file, "trials", 5);
    const double tolerance = config_f64(opt.file, "tolerance", 1e-4);
    const double fd_epsilon = config_f64(opt.file, "fd_epsilon", 1e-5);
    const std::uint64_t seed = opt.seed != 0 ? opt.seed : 20240601;
    const auto results = mtag::gradcheck_suite(trials, seed, fd_epsilon);
    double worst = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "config %zu: max_rel_error=%.3e worst=%s[%lld]\n", i,
                      results[i].max_rel_error, results[i].worst_tensor.c_str(),
                      static_cast<long long>(results[i].worst_index));
        std::cout << buf;
        worst = std::max(worst, results[i].max_rel_error);
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max relative error = %.3e (tolerance %.1e)\n", worst,
                  tolerance);
    std::cout << buf;
    return worst < tolerance ? kExitOk : kExitNumeric;
}

int cmd_expand(const Options& opt) {
    require_data_values(opt, /*corpus_required=*/false);
    require_values({{"--model", &opt.model}});
    const Pipeline p = load_pipeline(opt);
    std::ifstream model_in(opt.model, std::ios::binary);
    if (!model_in) {
        throw mtag::IoError("cannot open model '" + opt.model + "'");
    }
    const mtag::ModelFile file = mtag::load_model(model_in);
    mtag::require_vocab_match(file, p.input_vocab.fingerprint(), p.output_vocab.fingerprint());

    std::vector<mtag::Sentence> sentences;
    if (opt.corpus.empty()) {
        sentences = mtag::read_corpus(std::cin, mtag::Strictness::strict);
    } else {
        sentences = load_corpus(opt.corpus, mtag::Strictness::strict);
    }

    const std::size_t mask_index = p.input_vocab.mask_index();
    for (const auto& sentence : sentences) {
        std::size_t mask_position = sentence.tokens.size();
        std::vector<std::size_t> indices;
        indices.reserve(sentence.tokens.size());
        for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
            const std::string tag = mtag::format_tag(sentence.tokens[i].tag);
            if (tag == mtag::kMaskToken) {
                if (mask_position != sentence.tokens.size()) {
                    throw mtag::Error("sentence marks more than one position");
                }
                mask_position = i;
                indices.push_back(mask_index);
                continue;
            }
            const auto idx = p.input_vocab.find(tag);
            if (!idx) {
                throw mtag::UnknownTag("context tag '" + tag + "' is not in the vocabulary");
            }
            indices.push_back(*idx);
        }
        if (mask_position == sentence.tokens.size()) {
            throw mtag::Error("sentence marks no position (tag a token with " +
                              std::string(mtag::kMaskToken) + ")");
        }

        // the abbreviation key: surface first, lexeme as fallback, one
        // trailing period stripped
        auto strip = [](std::string s) {
            if (!s.empty() && s.back() == '.') {
                s.pop_back();
            }
            return s;
        };
        const mtag::Token& token = sentence.tokens[mask_position];
        std::string key = strip(token.surface);
        if (p.abbrevs.find_abbrev(key) == nullptr) {
            const std::string by_lexeme = strip(token.lexeme);
            if (p.abbrevs.find_abbrev(by_lexeme) != nullptr) {
                key = by_lexeme;
            }
        }
        const mtag::AbbrevEntry* entry = p.abbrevs.find_abbrev(key);
        if (entry == nullptr) {
            throw mtag::UnknownAbbrev("token '" + token.surface +
                                      "' is not in the abbreviation table");
        }

        const mtag::Prediction prediction = mtag::predict(file.params, file.config, indices);
        const std::string tag_string = p.output_vocab.decode(prediction.index);
        const double probability =
            prediction.probabilities[static_cast<Eigen::Index>(prediction.index)];

        std::string form;
        try {
            const mtag::Expansion expansion =
                mtag::expand(p.dict, p.abbrevs, key, mtag::parse_tag(tag_string));
            form = expansion.form;
            if (expansion.ambiguous) {
                std::cerr << "ambiguous forms for '" << key << "' + " << tag_string
                          << "; picked '" << form << "'\n";
            }
        } catch (const mtag::NoSuchForm& e) {
            std::cerr << "warning: " << e.what() << "; falling back to the base form\n";
            form = entry->base_form;
        }
        char buf[512];
        std::snprintf(buf, sizeof(buf), "%s\t%s\t%.6f\n", form.c_str(), tag_string.c_str(),
                      probability);
        std::cout << buf;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"morphosyntactic tag prediction and abbreviation expansion"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* cmd, ConfigBinder& binder) {
        cmd->add_option("--config", opt.config, "key=value config file; flags win");
        binder.bind(cmd->add_option("--seed", opt.seed, "random seed"), "seed", opt.seed);
        binder.bind(cmd->add_option("--max-len", opt.max_len, "sentence length cap"), "max_len",
                    opt.max_len);
        cmd->add_flag("--lenient", opt.lenient, "skip malformed corpus lines instead of failing");
    };
    auto add_data = [&opt](CLI::App* cmd, ConfigBinder& binder) {
        binder.bind(cmd->add_option("--corpus", opt.corpus, "vertical-format corpus"), "corpus",
                    opt.corpus);
        binder.bind(cmd->add_option("--dict", opt.dict, "morphological dictionary"), "dict",
                    opt.dict);
        binder.bind(cmd->add_option("--abbrevs", opt.abbrevs, "abbreviation table"), "abbrevs",
                    opt.abbrevs);
        binder.bind(cmd->add_option("--input-vocab", opt.input_vocab, "input vocabulary file"),
                    "input_vocab", opt.input_vocab);
        binder.bind(cmd->add_option("--output-vocab", opt.output_vocab, "output vocabulary file"),
                    "output_vocab", opt.output_vocab);
    };
    auto add_out = [&opt](CLI::App* cmd, ConfigBinder& binder, const char* help) {
        binder.bind(cmd->add_option("--out", opt.out, help), "out", opt.out);
    };
    auto add_model = [&opt](CLI::App* cmd, ConfigBinder& binder, const char* help) {
        binder.bind(cmd->add_option("--model", opt.model, help), "model", opt.model);
    };

    ConfigBinder binders[8];
    int which = -1;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus + dictionary + table");
    add_common(synth, binders[0]);
    add_out(synth, binders[0], "output path prefix");
    binders[0].bind(synth->add_option("--sentences", opt.sentences, "sentence count"), "sentences",
                    opt.sentences);
    binders[0].bind(
        synth->add_option("--grammar", opt.grammar, "grammar spec file (default: built-in)"),
        "grammar", opt.grammar);
    synth->callback([&] { which = 0; });

    auto* vocab = app.add_subcommand("vocab", "build input/output vocabularies from a corpus");
    add_common(vocab, binders[1]);
    add_data(vocab, binders[1]);
    vocab->callback([&] { which = 1; });

    auto* gen = app.add_subcommand("gen", "generate training examples as a TSV");
    add_common(gen, binders[2]);
    add_data(gen, binders[2]);
    add_out(gen, binders[2], "examples TSV path");
    gen->callback([&] { which = 2; });

    auto* train = app.add_subcommand("train", "train the tag classifier");
    add_common(train, binders[3]);
    add_data(train, binders[3]);
    add_model(train, binders[3], "model output path");
    binders[3].bind(train->add_option("--epochs", opt.epochs, "max epochs"), "epochs", opt.epochs);
    binders[3].bind(train->add_option("--batch-size", opt.batch_size, "accumulation group size"),
                    "batch_size", opt.batch_size);
    binders[3].bind(train->add_option("--lr", opt.lr, "learning rate"), "lr", opt.lr);
    binders[3].bind(
        train->add_option("--valid-fraction", opt.valid_fraction, "validation split fraction"),
        "valid_fraction", opt.valid_fraction);
    add_out(train, binders[3], "history path (default <model>.history.tsv)");
    train->callback([&] { which = 3; });

    auto* eval = app.add_subcommand("eval", "evaluate a model or baseline on a corpus");
    add_common(eval, binders[4]);
    add_data(eval, binders[4]);
    add_model(eval, binders[4], "model container");
    binders[4].bind(
        eval->add_option("--baseline", opt.baseline, "baseline table (alternative to --model)"),
        "baseline", opt.baseline);
    binders[4].bind(eval->add_option("--schema", opt.schema, "attribute schema file"), "schema",
                    opt.schema);
    add_out(eval, binders[4], "machine-readable report path");
    eval->callback([&] { which = 4; });

    auto* baseline = app.add_subcommand("baseline", "fit the most-frequent-tag baseline");
    add_common(baseline, binders[5]);
    add_data(baseline, binders[5]);
    add_out(baseline, binders[5], "baseline table output path");
    baseline->callback([&] { which = 5; });

    auto* gradcheck = app.add_subcommand("gradcheck", "check gradients against finite differences");
    add_common(gradcheck, binders[6]);
    gradcheck->callback([&] { which = 6; });

    auto* expand = app.add_subcommand("expand", "expand marked abbreviations in tagged sentences");
    add_common(expand, binders[7]);
    add_data(expand, binders[7]);
    add_model(expand, binders[7], "model container");
    expand->callback([&] { which = 7; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (!opt.config.empty()) {
            opt.file = read_config_file(opt.config);
            binders[which].apply(opt.file);
        }
        switch (which) {
            case 0:
                return cmd_synth(opt);
            case 1:
                return cmd_vocab(opt);
            case 2:
                return cmd_gen(opt);
            case 3:
                return cmd_train(opt);
            case 4:
                return cmd_eval(opt);
            case 5:
                return cmd_baseline(opt);
            case 6:
                return cmd_gradcheck(opt);
            case 7:
                return cmd_expand(opt);
            default:
                return kExitUsage;
        }
    } catch (const MissingOption& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const mtag::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
