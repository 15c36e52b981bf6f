#include "soapseg/types.hpp"

#include <algorithm>

namespace soapseg {

std::string_view display_name(SoapLabel label) {
  switch (label) {
    case SoapLabel::Subjective: return "S";
    case SoapLabel::Objective: return "O";
    case SoapLabel::Assessment: return "A";
    case SoapLabel::Plan: return "P";
    case SoapLabel::Out: return "Out";
    case SoapLabel::AssessmentAndPlan: return "A&P";
  }
  return "?";
}

std::optional<SoapLabel> label_from_display(std::string_view name) {
  if (name == "S") return SoapLabel::Subjective;
  if (name == "O") return SoapLabel::Objective;
  if (name == "A") return SoapLabel::Assessment;
  if (name == "P") return SoapLabel::Plan;
  if (name == "Out") return SoapLabel::Out;
  if (name == "A&P") return SoapLabel::AssessmentAndPlan;
  return std::nullopt;
}

LabelScheme LabelScheme::standard() {
  return LabelScheme("standard", {SoapLabel::Subjective, SoapLabel::Objective, SoapLabel::Assessment,
                                  SoapLabel::Plan, SoapLabel::Out});
}

LabelScheme LabelScheme::merged() {
  return LabelScheme("merged", {SoapLabel::Subjective, SoapLabel::Objective,
                                SoapLabel::AssessmentAndPlan, SoapLabel::Out});
}

LabelScheme LabelScheme::by_name(std::string_view name) {
  if (name == "standard") return standard();
  if (name == "merged") return merged();
  throw ConfigError("unknown label scheme '" + std::string(name) + "' (expected standard|merged)");
}

bool LabelScheme::contains(SoapLabel label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

int LabelScheme::index_of(SoapLabel label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw ContractError("label " + std::string(display_name(label)) + " is not in the " + name_ +
                        " label scheme");
  }
  return static_cast<int>(it - labels_.begin());
}

SoapLabel LabelScheme::at(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= labels_.size()) {
    throw ContractError("label index " + std::to_string(index) + " out of range");
  }
  return labels_[static_cast<std::size_t>(index)];
}

SoapLabel LabelScheme::project(SoapLabel label) const {
  if (contains(label)) return label;
  if ((label == SoapLabel::Assessment || label == SoapLabel::Plan) &&
      contains(SoapLabel::AssessmentAndPlan)) {
    return SoapLabel::AssessmentAndPlan;
  }
  throw ContractError("label " + std::string(display_name(label)) + " cannot be mapped into the " +
                      name_ + " label scheme");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Weak: return "weak";
    case Provenance::Gold: return "gold";
    case Provenance::Predicted: return "predicted";
  }
  return "?";
}

std::optional<Provenance> provenance_from_name(std::string_view name) {
  if (name == "weak") return Provenance::Weak;
  if (name == "gold") return Provenance::Gold;
  if (name == "predicted") return Provenance::Predicted;
  return std::nullopt;
}

void validate(const LabeledNote& note) {
  if (note.labels.size() != note.paragraphs.size()) {
    throw ValidationError("note '" + note.note.id + "': " + std::to_string(note.labels.size()) +
                          " labels for " + std::to_string(note.paragraphs.size()) + " paragraphs");
  }
  if (note.topic_flags && note.topic_flags->size() != note.paragraphs.size()) {
    throw ValidationError("note '" + note.note.id + "': topic flag count does not match paragraphs");
  }
}

}  // namespace soapseg
