#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace soapseg {

// Error hierarchy. Each maps onto one status code of the C API.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IoError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };

enum class SoapLabel : std::uint8_t {
  Subjective,
  Objective,
  Assessment,
  Plan,
  Out,
  AssessmentAndPlan,
};

// Display names: "S", "O", "A", "P", "Out", "A&P".
std::string_view display_name(SoapLabel label);
std::optional<SoapLabel> label_from_display(std::string_view name);

// Ordered label space of a tagger. Standard corpora use {S,O,A,P,Out};
// merged corpora use {S,O,A&P,Out}.
class LabelScheme {
 public:
  static LabelScheme standard();
  static LabelScheme merged();
  // "standard" | "merged"
  static LabelScheme by_name(std::string_view name);

  const std::vector<SoapLabel>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::string_view name() const { return name_; }
  bool contains(SoapLabel label) const;
  // Throws ContractError when the label is not part of the scheme.
  int index_of(SoapLabel label) const;
  SoapLabel at(int index) const;

  // Maps a label of another scheme into this one (A, P -> A&P when merged).
  SoapLabel project(SoapLabel label) const;

 private:
  LabelScheme(std::string name, std::vector<SoapLabel> labels)
      : name_(std::move(name)), labels_(std::move(labels)) {}
  std::string name_;
  std::vector<SoapLabel> labels_;
};

struct RawNote {
  std::string id;
  std::string text;
  std::string source_tag;

  bool operator==(const RawNote&) const = default;
};

enum class Provenance : std::uint8_t { Weak, Gold, Predicted };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> provenance_from_name(std::string_view name);

struct Paragraph {
  int index = 0;
  std::string text;
  std::vector<std::string> sentences;
  std::optional<std::string> header;

  bool operator==(const Paragraph&) const = default;
};

struct LabeledNote {
  RawNote note;
  std::vector<Paragraph> paragraphs;
  std::vector<SoapLabel> labels;
  Provenance provenance = Provenance::Weak;
  std::optional<std::vector<bool>> topic_flags;

  bool operator==(const LabeledNote&) const = default;
};

// Checks |labels| == |paragraphs| and topic flag length.
void validate(const LabeledNote& note);

}  // namespace soapseg
