#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/nn.hpp"
#include "mtag/tag.hpp"

namespace mtag {

// Context-free reference: the most frequent training tag per abbreviation.
struct BaselineModel {
    std::map<std::string, std::string> modal_tag;  // abbrev_id -> tag string

    // Modal target per abbreviation; ties go to the lexicographically
    // smallest tag string. EmptyDataset on an empty span.
    static BaselineModel fit(std::span<const TrainingExample> examples,
                             const TagVocab& output_vocab);

    // abbrev<TAB>tag lines.
    static BaselineModel read(std::istream& in);
    void write(std::ostream& out) const;
};

// Categories overlap by design: one wrong prediction may differ in number
// and gender at once. The *_only counters keep a disjoint view for reports
// that quote single categories.
struct ConfusionCounts {
    std::size_t number = 0;
    std::size_t case_ = 0;
    std::size_t gender = 0;
    std::size_t other = 0;  // wrong, but none of the three attributes differ
    std::size_t number_only = 0;
    std::size_t case_only = 0;
    std::size_t gender_only = 0;
};

struct AbbrevStats {
    std::size_t total = 0;
    std::size_t correct = 0;
};

struct EvalReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    bool accuracy_defined = false;  // false when total == 0
    double accuracy = 0.0;
    std::map<std::string, AbbrevStats> per_abbrev;
    ConfusionCounts confusions;
    std::size_t skipped = 0;  // baseline: examples whose abbreviation it never saw
};

// Applies the category rules to one truth/prediction pair.
void count_confusions(const Tag& truth, const Tag& predicted, const AttributeSchema& schema,
                      ConfusionCounts& counts);

ConfusionCounts error_analysis(std::span<const std::pair<Tag, Tag>> pairs,
                               const AttributeSchema& schema);

// Unseen abbreviations count as incorrect and land in `skipped`, keeping the
// denominator identical to the network's.
EvalReport evaluate_baseline(const BaselineModel& model, std::span<const TrainingExample> examples,
                             const TagVocab& output_vocab, const AttributeSchema& schema);

EvalReport evaluate_model(const ModelParams& params, const ModelConfig& config,
                          std::span<const TrainingExample> examples, const TagVocab& output_vocab,
                          const AttributeSchema& schema);

void write_report_text(std::ostream& out, const EvalReport& report);
void write_report_tsv(std::ostream& out, const EvalReport& report);

}  // namespace mtag
