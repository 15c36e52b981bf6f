#pragma once

#include <map>
#include <string>
#include <vector>

#include "soapseg/preprocess.hpp"
#include "soapseg/topicseg.hpp"
#include "soapseg/types.hpp"

namespace soapseg::weaklabel {

struct WeakLabelState {
  SoapLabel current_label = SoapLabel::Out;
  int position = 0;
};

// Labels already-split paragraphs. Throws ContractError when
// flags.size() != paragraphs.size().
std::vector<SoapLabel> label_paragraphs(const std::vector<Paragraph>& paragraphs,
                                        const preprocess::HeaderLexicon& lexicon,
                                        const topicseg::TopicFlags& flags);

LabeledNote weak_label(const RawNote& note, const preprocess::HeaderLexicon& lexicon,
                       const topicseg::TopicFlags& flags);

// Splits, segments and labels in one go.
LabeledNote weak_label(const RawNote& note, const preprocess::HeaderLexicon& lexicon);

struct WeakCorpusReport {
  std::size_t total = 0;
  std::size_t retained = 0;
  std::map<SoapLabel, std::size_t> paragraphs_per_label;

  std::size_t dropped() const { return total - retained; }
  double retained_fraction() const {
    return total == 0 ? 0.0 : static_cast<double>(retained) / static_cast<double>(total);
  }
  // "3/10 retained" followed by per-label paragraph counts.
  std::string to_text() const;
};

struct WeakCorpus {
  std::vector<LabeledNote> notes;
  WeakCorpusReport report;
};

WeakCorpus build_weak_corpus(const std::vector<RawNote>& notes, const preprocess::HeaderLexicon& lexicon,
                             preprocess::StructureOptions structure = {});

}  // namespace soapseg::weaklabel
