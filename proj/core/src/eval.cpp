#include "mtag/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>

#include "mtag/errors.hpp"

namespace mtag {

BaselineModel BaselineModel::fit(std::span<const TrainingExample> examples,
                                 const TagVocab& output_vocab) {
    if (examples.empty()) {
        throw EmptyDataset("cannot fit a baseline on an empty example set");
    }
    // (abbrev, tag) -> count; ordered maps make the mode tie-break (smallest
    // tag string) fall out of plain iteration.
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const auto& ex : examples) {
        ++counts[ex.abbrev_id][output_vocab.decode(ex.target_index)];
    }
    BaselineModel model;
    for (const auto& [abbrev, tag_counts] : counts) {
        const std::string* best_tag = nullptr;
        std::size_t best_count = 0;
        for (const auto& [tag, count] : tag_counts) {
            if (count > best_count) {
                best_count = count;
                best_tag = &tag;
            }
        }
        model.modal_tag.emplace(abbrev, *best_tag);
    }
    return model;
}

BaselineModel BaselineModel::read(std::istream& in) {
    BaselineModel model;
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
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ParseError("expected abbrev<TAB>tag", line_no);
        }
        if (!model.modal_tag.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
            throw ParseError("duplicate abbreviation", line_no);
        }
    }
    return model;
}

void BaselineModel::write(std::ostream& out) const {
    for (const auto& [abbrev, tag] : modal_tag) {
        out << abbrev << '\t' << tag << '\n';
    }
}

void count_confusions(const Tag& truth, const Tag& predicted, const AttributeSchema& schema,
                      ConfusionCounts& counts) {
    if (truth == predicted) {
        return;
    }
    const bool number_differs =
        tag_attribute(truth, "number", schema) != tag_attribute(predicted, "number", schema);
    const bool case_differs =
        tag_attribute(truth, "case", schema) != tag_attribute(predicted, "case", schema);
    const bool gender_differs =
        tag_attribute(truth, "gender", schema) != tag_attribute(predicted, "gender", schema);
    counts.number += number_differs ? 1 : 0;
    counts.case_ += case_differs ? 1 : 0;
    counts.gender += gender_differs ? 1 : 0;
    const int differing = (number_differs ? 1 : 0) + (case_differs ? 1 : 0) + (gender_differs ? 1 : 0);
    if (differing == 0) {
        ++counts.other;
    } else if (differing == 1) {
        counts.number_only += number_differs ? 1 : 0;
        counts.case_only += case_differs ? 1 : 0;
        counts.gender_only += gender_differs ? 1 : 0;
    }
}

ConfusionCounts error_analysis(std::span<const std::pair<Tag, Tag>> pairs,
                               const AttributeSchema& schema) {
    ConfusionCounts counts;
    for (const auto& [truth, predicted] : pairs) {
        count_confusions(truth, predicted, schema, counts);
    }
    return counts;
}

namespace {

void tally(EvalReport& report, const std::string& abbrev, const std::string& truth_tag,
           const std::string& predicted_tag, const AttributeSchema& schema) {
    ++report.total;
    auto& stats = report.per_abbrev[abbrev];
    ++stats.total;
    if (truth_tag == predicted_tag) {
        ++report.correct;
        ++stats.correct;
        return;
    }
    count_confusions(parse_tag(truth_tag), parse_tag(predicted_tag), schema, report.confusions);
}

void finish(EvalReport& report) {
    report.accuracy_defined = report.total > 0;
    report.accuracy = report.accuracy_defined
                          ? static_cast<double>(report.correct) / static_cast<double>(report.total)
                          : 0.0;
}

}  // namespace

EvalReport evaluate_baseline(const BaselineModel& model, std::span<const TrainingExample> examples,
                             const TagVocab& output_vocab, const AttributeSchema& schema) {
    EvalReport report;
    for (const auto& ex : examples) {
        const std::string truth = output_vocab.decode(ex.target_index);
        auto it = model.modal_tag.find(ex.abbrev_id);
        if (it == model.modal_tag.end()) {
            // no coverage: incorrect by fiat, tallied separately
            ++report.total;
            ++report.per_abbrev[ex.abbrev_id].total;
            ++report.skipped;
            continue;
        }
        tally(report, ex.abbrev_id, truth, it->second, schema);
    }
    finish(report);
    return report;
}

EvalReport evaluate_model(const ModelParams& params, const ModelConfig& config,
                          std::span<const TrainingExample> examples, const TagVocab& output_vocab,
                          const AttributeSchema& schema) {
    EvalReport report;
    for (const auto& ex : examples) {
        const Prediction p = predict(params, config, ex.input_indices);
        tally(report, ex.abbrev_id, output_vocab.decode(ex.target_index), output_vocab.decode(p.index),
              schema);
    }
    finish(report);
    return report;
}

void write_report_text(std::ostream& out, const EvalReport& report) {
    char buf[160];
    if (!report.accuracy_defined) {
        out << "no examples evaluated\n";
        return;
    }
    std::snprintf(buf, sizeof(buf), "overall accuracy  %.4f  (%zu/%zu correct)\n", report.accuracy,
                  report.correct, report.total);
    out << buf;
    if (report.skipped > 0) {
        out << "unseen abbreviations counted incorrect: " << report.skipped << '\n';
    }
    out << "\nper-abbreviation accuracy\n";
    std::size_t width = 6;
    for (const auto& [abbrev, stats] : report.per_abbrev) {
        width = std::max(width, abbrev.size());
    }
    for (const auto& [abbrev, stats] : report.per_abbrev) {
        const double acc =
            stats.total > 0 ? static_cast<double>(stats.correct) / static_cast<double>(stats.total)
                            : 0.0;
        std::snprintf(buf, sizeof(buf), "  %-*s  %6zu  %6zu  %.4f\n", static_cast<int>(width),
                      abbrev.c_str(), stats.total, stats.correct, acc);
        out << buf;
    }
    const auto& c = report.confusions;
    out << "\nconfusions among incorrect predictions (categories may overlap)\n";
    std::snprintf(buf, sizeof(buf),
                  "  number %zu (only %zu)\n  case   %zu (only %zu)\n  gender %zu (only %zu)\n"
                  "  other  %zu\n",
                  c.number, c.number_only, c.case_, c.case_only, c.gender, c.gender_only, c.other);
    out << buf;
}

void write_report_tsv(std::ostream& out, const EvalReport& report) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "overall\t%zu\t%zu\t%.6f\n", report.total, report.correct,
                  report.accuracy);
    out << buf;
    out << "skipped\t" << report.skipped << '\n';
    for (const auto& [abbrev, stats] : report.per_abbrev) {
        std::snprintf(buf, sizeof(buf), "abbrev\t%s\t%zu\t%zu\n", abbrev.c_str(), stats.total,
                      stats.correct);
        out << buf;
    }
    const auto& c = report.confusions;
    out << "confusion\tnumber\t" << c.number << '\n';
    out << "confusion\tcase\t" << c.case_ << '\n';
    out << "confusion\tgender\t" << c.gender << '\n';
    out << "confusion\tother\t" << c.other << '\n';
    out << "confusion_only\tnumber\t" << c.number_only << '\n';
    out << "confusion_only\tcase\t" << c.case_only << '\n';
    out << "confusion_only\tgender\t" << c.gender_only << '\n';
}

}  // namespace mtag
