#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "support.hpp"

using testsupport::CliResult;
using testsupport::TempDir;
using testsupport::lines_of;
using testsupport::read_file;
using testsupport::run_cli;
using testsupport::write_file;

namespace {

// One shared workspace: synthetic data files plus a small trained model,
// built once through the real binary.
struct Workspace {
    TempDir dir;
    std::string corpus, dict, abbrevs, input_vocab, output_vocab, model, config;

    Workspace() {
        corpus = dir.file("s.corpus.tsv");
        dict = dir.file("s.dict.tsv");
        abbrevs = dir.file("s.abbrevs.tsv");
        input_vocab = dir.file("in.vocab");
        output_vocab = dir.file("out.vocab");
        model = dir.file("model.bin");
        config = dir.file("small.conf");
        write_file(config,
                   "# small architecture for fast tests\n"
                   "embedding_dim=8\n"
                   "recurrent_layers=1\n"
                   "hidden_per_direction=12\n"
                   "fc_units=16\n");
        REQUIRE(run_cli("synth --out " + dir.file("s") + " --sentences 700 --seed 5").exit_code ==
                0);
        REQUIRE(run_cli("vocab --corpus " + corpus + " --dict " + dict + " --abbrevs " + abbrevs +
                        " --input-vocab " + input_vocab + " --output-vocab " + output_vocab)
                    .exit_code == 0);
        REQUIRE(run_cli("train --corpus " + corpus + " --dict " + dict + " --abbrevs " + abbrevs +
                        " --input-vocab " + input_vocab + " --output-vocab " + output_vocab +
                        " --model " + model + " --seed 3 --epochs 4 --valid-fraction 0.1" +
                        " --config " + config)
                    .exit_code == 0);
    }

    std::string data_flags() const {
        return " --corpus " + corpus + resource_flags();
    }
    std::string resource_flags() const {
        return " --dict " + dict + " --abbrevs " + abbrevs + " --input-vocab " + input_vocab +
               " --output-vocab " + output_vocab;
    }
};

Workspace& workspace() {
    static Workspace w;
    return w;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(run_cli("no-such-command").exit_code == 1);
    CHECK(run_cli("vocab --no-such-flag x").exit_code == 1);
    CHECK(run_cli("synth").exit_code == 1);  // --out missing
    CHECK(run_cli("eval" + workspace().data_flags()).exit_code == 1);  // no --model/--baseline
}

TEST_CASE("synth writes deterministic files") {
    TempDir dir;
    const std::string args = " --sentences 120 --seed 9";
    REQUIRE(run_cli("synth --out " + dir.file("a") + args).exit_code == 0);
    REQUIRE(run_cli("synth --out " + dir.file("b") + args).exit_code == 0);
    CHECK(read_file(dir.file("a.corpus.tsv")) == read_file(dir.file("b.corpus.tsv")));
    CHECK(read_file(dir.file("a.dict.tsv")) == read_file(dir.file("b.dict.tsv")));
    CHECK(read_file(dir.file("a.abbrevs.tsv")) == read_file(dir.file("b.abbrevs.tsv")));
    CHECK(!read_file(dir.file("a.corpus.tsv")).empty());
}

TEST_CASE("vocab line counts match an independent text recount") {
    Workspace& w = workspace();

    // recount with nothing but the documented file formats
    std::set<std::pair<std::string, std::string>> dict_pairs;
    for (const auto& line : lines_of(read_file(w.dict))) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_tabs(line);
        REQUIRE(f.size() == 3);
        dict_pairs.insert({f[1], f[2]});
    }
    std::set<std::string> bases;
    for (const auto& line : lines_of(read_file(w.abbrevs))) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_tabs(line);
        REQUIRE(f.size() >= 2);
        bases.insert(f[1]);
    }
    std::set<std::string> input_tags, output_tags;
    std::vector<std::vector<std::array<std::string, 3>>> sentences(1);
    for (const auto& line : lines_of(read_file(w.corpus))) {
        if (line.empty()) {
            if (!sentences.back().empty()) sentences.emplace_back();
            continue;
        }
        if (line[0] == '#') continue;
        const auto f = split_tabs(line);
        REQUIRE(f.size() == 3);
        sentences.back().push_back({f[0], f[1], f[2]});
    }
    for (const auto& sentence : sentences) {
        if (sentence.empty() || sentence.size() > 30) continue;
        bool any_match = false;
        for (const auto& token : sentence) {
            if (bases.count(token[1]) != 0 && dict_pairs.count({token[1], token[2]}) != 0) {
                any_match = true;
            }
        }
        if (!any_match) continue;
        for (const auto& token : sentence) {
            input_tags.insert(token[2]);
            if (bases.count(token[1]) != 0 && dict_pairs.count({token[1], token[2]}) != 0) {
                output_tags.insert(token[2]);
            }
        }
    }

    const auto input_lines = lines_of(read_file(w.input_vocab));
    const auto output_lines = lines_of(read_file(w.output_vocab));
    CHECK(input_lines.size() == input_tags.size() + 1);  // +1 mask
    CHECK(input_lines.at(0) == "<MASK>");
    CHECK(output_lines.size() == output_tags.size());
}

TEST_CASE("vocab reruns are byte-identical, empty corpora are data errors") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string in2 = dir.file("in2.vocab");
    const std::string out2 = dir.file("out2.vocab");
    REQUIRE(run_cli("vocab --corpus " + w.corpus + " --dict " + w.dict + " --abbrevs " +
                    w.abbrevs + " --input-vocab " + in2 + " --output-vocab " + out2)
                .exit_code == 0);
    CHECK(read_file(in2) == read_file(w.input_vocab));
    CHECK(read_file(out2) == read_file(w.output_vocab));

    const std::string empty = dir.file("empty.tsv");
    write_file(empty, "");
    CHECK(run_cli("vocab --corpus " + empty + " --dict " + w.dict + " --abbrevs " + w.abbrevs +
                  " --input-vocab " + dir.file("x") + " --output-vocab " + dir.file("y"))
              .exit_code == 2);
}

TEST_CASE("gen writes one line per example") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string out = dir.file("examples.tsv");
    const CliResult r = run_cli("gen" + w.data_flags() + " --out " + out);
    REQUIRE(r.exit_code == 0);
    const auto lines = lines_of(read_file(out));
    REQUIRE(lines.size() > 1);
    CHECK(lines[0][0] == '#');
    const std::string stdout_line = r.out;
    const std::size_t reported = std::stoul(
        stdout_line.substr(stdout_line.find("examples=") + 9));
    CHECK(lines.size() - 1 == reported);
    for (std::size_t i = 1; i < std::min<std::size_t>(lines.size(), 20); ++i) {
        const auto fields = split_tabs(lines[i]);
        REQUIRE(fields.size() == 4);
        CHECK(fields[3].find("<MASK>") != std::string::npos);
    }
}

TEST_CASE("config file supplies values, flags win") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string conf = dir.file("run.conf");
    write_file(conf, "corpus=" + w.corpus + "\ndict=" + w.dict + "\nabbrevs=" + w.abbrevs +
                         "\ninput_vocab=" + w.input_vocab + "\noutput_vocab=" + w.output_vocab +
                         "\nout=" + dir.file("from_config.tsv") + "\n");
    REQUIRE(run_cli("gen --config " + conf).exit_code == 0);
    CHECK(!read_file(dir.file("from_config.tsv")).empty());

    // the flag overrides the config value for the same key
    REQUIRE(run_cli("gen --config " + conf + " --out " + dir.file("flag_wins.tsv")).exit_code ==
            0);
    CHECK(!read_file(dir.file("flag_wins.tsv")).empty());
    CHECK(read_file(dir.file("from_config.tsv")) == read_file(dir.file("flag_wins.tsv")));
}

TEST_CASE("training reruns reproduce model and history byte for byte") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string model2 = dir.file("model2.bin");
    REQUIRE(run_cli("train" + w.data_flags() + " --model " + model2 +
                    " --seed 3 --epochs 4 --valid-fraction 0.1 --config " + w.config)
                .exit_code == 0);
    CHECK(read_file(model2) == read_file(w.model));
    CHECK(read_file(model2 + ".history.tsv") == read_file(w.model + ".history.tsv"));

    const auto history = lines_of(read_file(w.model + ".history.tsv"));
    REQUIRE(history.size() == 6);  // header + 4 epochs + best marker
    CHECK(history[0] == "epoch\ttrain_loss\ttrain_accuracy\tvalid_loss\tvalid_accuracy");
    CHECK(history[5].rfind("# best_epoch\t", 0) == 0);
}

TEST_CASE("eval reports accuracy and enforces vocabulary fingerprints") {
    Workspace& w = workspace();
    TempDir dir;
    const CliResult r = run_cli("eval" + w.data_flags() + " --model " + w.model + " --out " +
                                dir.file("report.tsv"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("overall accuracy") != std::string::npos);
    const auto tsv = lines_of(read_file(dir.file("report.tsv")));
    CHECK(tsv.at(0).rfind("overall\t", 0) == 0);

    // vocabularies from a different corpus have different fingerprints
    REQUIRE(run_cli("synth --out " + dir.file("other") + " --sentences 300 --seed 77").exit_code ==
            0);
    REQUIRE(run_cli("vocab --corpus " + dir.file("other.corpus.tsv") + " --dict " +
                    dir.file("other.dict.tsv") + " --abbrevs " + dir.file("other.abbrevs.tsv") +
                    " --input-vocab " + dir.file("other.in") + " --output-vocab " +
                    dir.file("other.out"))
                .exit_code == 0);
    const CliResult mismatched =
        run_cli("eval --corpus " + w.corpus + " --dict " + w.dict + " --abbrevs " + w.abbrevs +
                " --input-vocab " + dir.file("other.in") + " --output-vocab " +
                dir.file("other.out") + " --model " + w.model);
    CHECK(mismatched.exit_code == 2);
}

TEST_CASE("baseline fits, persists and evaluates") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string table = dir.file("baseline.tsv");
    const CliResult fit = run_cli("baseline" + w.data_flags() + " --out " + table);
    REQUIRE(fit.exit_code == 0);
    CHECK(fit.out.find("train_accuracy=") != std::string::npos);
    const auto lines = lines_of(read_file(table));
    CHECK(lines.size() == 4);  // one modal tag per abbreviation

    const CliResult eval = run_cli("eval" + w.data_flags() + " --baseline " + table);
    CHECK(eval.exit_code == 0);
    CHECK(eval.out.find("overall accuracy") != std::string::npos);
}

TEST_CASE("gradcheck passes and prints its maximum") {
    const CliResult r = run_cli("gradcheck --seed 20240601");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("max relative error") != std::string::npos);
    const std::size_t at = r.out.find("max relative error = ");
    const double reported = std::stod(r.out.substr(at + 21));
    CHECK(reported < 1e-4);
}

TEST_CASE("expand resolves a marked sentence against the dictionary") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string marked = dir.file("marked.tsv");
    write_file(marked,
               "det_sg_gen_f\tdet\tdet:sg:gen:f\n"
               "vl\tvl\t<MASK>\n"
               "verb_sg\tverb\tfin:sg\n"
               "tam\ttam\tadv\n"
               ".\t.\tinterp\n");
    const CliResult r = run_cli("expand" + w.resource_flags() + " --corpus " + marked + " --model " +
                                w.model);
    REQUIRE(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 1);
    const auto fields = split_tabs(lines[0]);
    REQUIRE(fields.size() == 3);
    // whatever the model picked, the form must come from the dictionary
    CHECK(read_file(w.dict).find(fields[0] + "\tvela\t" + fields[1]) != std::string::npos);
    const double probability = std::stod(fields[2]);
    CHECK(probability > 0.0);
    CHECK(probability <= 1.0);
}

TEST_CASE("expand falls back to the base form when no form carries the tag") {
    Workspace& w = workspace();
    TempDir dir;
    // an abbreviation whose lexeme the dictionary does not know at all
    const std::string extended = dir.file("extended.abbrevs.tsv");
    write_file(extended, read_file(w.abbrevs) + "zz\tzorg\n");
    const std::string marked = dir.file("marked.tsv");
    write_file(marked,
               "det_sg_gen_f\tdet\tdet:sg:gen:f\n"
               "zz\tzz\t<MASK>\n"
               "verb_sg\tverb\tfin:sg\n"
               "tam\ttam\tadv\n"
               ".\t.\tinterp\n");
    const CliResult r = run_cli("expand --corpus " + marked + " --dict " + w.dict + " --abbrevs " +
                                extended + " --input-vocab " + w.input_vocab +
                                " --output-vocab " + w.output_vocab + " --model " + w.model);
    REQUIRE(r.exit_code == 0);
    const auto fields = split_tabs(lines_of(r.out).at(0));
    CHECK(fields.at(0) == "zorg");
}

TEST_CASE("expand rejects unknown abbreviations and unmarked sentences") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string unknown = dir.file("unknown.tsv");
    write_file(unknown, "xx\txx\t<MASK>\n.\t.\tinterp\n");
    CHECK(run_cli("expand" + w.resource_flags() + " --corpus " + unknown + " --model " + w.model)
              .exit_code == 2);

    const std::string unmarked = dir.file("unmarked.tsv");
    write_file(unmarked, "tam\ttam\tadv\n.\t.\tinterp\n");
    CHECK(run_cli("expand" + w.resource_flags() + " --corpus " + unmarked + " --model " + w.model)
              .exit_code == 2);
}

TEST_CASE("lenient mode tolerates malformed corpus lines") {
    Workspace& w = workspace();
    TempDir dir;
    const std::string dirty = dir.file("dirty.tsv");
    write_file(dirty, "this line is broken\n" + read_file(w.corpus));
    CHECK(run_cli("vocab --corpus " + dirty + " --dict " + w.dict + " --abbrevs " + w.abbrevs +
                  " --input-vocab " + dir.file("i") + " --output-vocab " + dir.file("o"))
              .exit_code == 2);
    CHECK(run_cli("vocab --lenient --corpus " + dirty + " --dict " + w.dict + " --abbrevs " +
                  w.abbrevs + " --input-vocab " + dir.file("i") + " --output-vocab " +
                  dir.file("o"))
              .exit_code == 0);
    CHECK(read_file(dir.file("i")) == read_file(w.input_vocab));
}
