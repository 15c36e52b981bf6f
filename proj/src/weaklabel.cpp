#include "soapseg/weaklabel.hpp"

#include <sstream>

namespace soapseg::weaklabel {

std::vector<SoapLabel> label_paragraphs(const std::vector<Paragraph>& paragraphs,
                                        const preprocess::HeaderLexicon& lexicon,
                                        const topicseg::TopicFlags& flags) {
  if (flags.size() != paragraphs.size()) {
    throw ContractError("weak_label: " + std::to_string(flags.size()) + " topic flags for " +
                        std::to_string(paragraphs.size()) + " paragraphs");
  }
  WeakLabelState state;
  std::vector<SoapLabel> labels;
  labels.reserve(paragraphs.size());
  for (const Paragraph& p : paragraphs) {
    std::optional<SoapLabel> mapped;
    if (p.header) mapped = lexicon.lookup(*p.header);
    const bool topic_changed = !flags[static_cast<std::size_t>(state.position)];
    if (mapped) {
      state.current_label = *mapped;
    } else if (state.current_label == SoapLabel::Plan && topic_changed) {
      state.current_label = SoapLabel::Out;
    }
    labels.push_back(state.current_label);
    ++state.position;
  }
  return labels;
}

LabeledNote weak_label(const RawNote& note, const preprocess::HeaderLexicon& lexicon,
                       const topicseg::TopicFlags& flags) {
  LabeledNote out;
  out.note = note;
  out.paragraphs = preprocess::split_paragraphs(note);
  out.labels = label_paragraphs(out.paragraphs, lexicon, flags);
  out.provenance = Provenance::Weak;
  out.topic_flags = flags;
  return out;
}

LabeledNote weak_label(const RawNote& note, const preprocess::HeaderLexicon& lexicon) {
  LabeledNote out;
  out.note = note;
  out.paragraphs = preprocess::split_paragraphs(note);
  topicseg::TopicFlags flags = topicseg::segment(out.paragraphs);
  out.labels = label_paragraphs(out.paragraphs, lexicon, flags);
  out.provenance = Provenance::Weak;
  out.topic_flags = std::move(flags);
  return out;
}

std::string WeakCorpusReport::to_text() const {
  std::ostringstream os;
  os << retained << "/" << total << " retained\n";
  os << "dropped: " << dropped() << "\n";
  for (const auto& [label, count] : paragraphs_per_label) {
    os << "paragraphs[" << display_name(label) << "]: " << count << "\n";
  }
  return os.str();
}

WeakCorpus build_weak_corpus(const std::vector<RawNote>& notes, const preprocess::HeaderLexicon& lexicon,
                             preprocess::StructureOptions structure) {
  WeakCorpus out;
  out.report.total = notes.size();
  const LabelScheme scheme = LabelScheme::standard();
  for (SoapLabel l : scheme.labels()) out.report.paragraphs_per_label[l] = 0;
  for (const RawNote& note : notes) {
    std::vector<Paragraph> paragraphs = preprocess::split_paragraphs(note);
    if (!preprocess::is_explicitly_structured(paragraphs, lexicon, structure)) continue;
    LabeledNote labeled;
    labeled.note = note;
    labeled.paragraphs = std::move(paragraphs);
    topicseg::TopicFlags flags = topicseg::segment(labeled.paragraphs);
    labeled.labels = label_paragraphs(labeled.paragraphs, lexicon, flags);
    labeled.topic_flags = std::move(flags);
    labeled.provenance = Provenance::Weak;
    for (SoapLabel l : labeled.labels) ++out.report.paragraphs_per_label[l];
    out.notes.push_back(std::move(labeled));
  }
  out.report.retained = out.notes.size();
  return out;
}

}  // namespace soapseg::weaklabel
