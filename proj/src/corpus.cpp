#include "soapseg/corpus.hpp"

#include <json.hpp>
#include <set>
#include <sstream>

#include "soapseg/preprocess.hpp"
#include "soapseg/rng.hpp"
#include "util.hpp"

namespace soapseg::corpus {

using json = nlohmann::ordered_json;

namespace {

struct Record {
  RawNote note;
  std::optional<std::vector<SoapLabel>> labels;
  std::optional<Provenance> provenance;
  std::optional<std::vector<bool>> topic_flags;
};

std::string required_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing \"" + key + "\" field");
  if (!it->is_string()) throw ParseError(where + ": \"" + key + "\" must be a string");
  return it->get<std::string>();
}

Record parse_record(std::string_view line, const std::string& where) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
  Record r;
  r.note.id = required_string(obj, "id", where);
  r.note.text = required_string(obj, "text", where);
  r.note.source_tag = obj.contains("source_tag") ? required_string(obj, "source_tag", where) : "";
  if (r.note.id.empty()) throw ValidationError(where + ": empty id");
  if (r.note.text.empty()) throw ValidationError(where + ": empty text");
  if (auto it = obj.find("labels"); it != obj.end()) {
    if (!it->is_array()) throw ParseError(where + ": \"labels\" must be an array");
    std::vector<SoapLabel> labels;
    for (const auto& v : *it) {
      auto label = v.is_string() ? label_from_display(v.get<std::string>()) : std::nullopt;
      if (!label) throw ParseError(where + ": invalid label " + v.dump());
      labels.push_back(*label);
    }
    r.labels = std::move(labels);
  }
  if (auto it = obj.find("provenance"); it != obj.end()) {
    auto p = it->is_string() ? provenance_from_name(it->get<std::string>()) : std::nullopt;
    if (!p) throw ParseError(where + ": invalid provenance " + it->dump());
    r.provenance = *p;
  }
  if (auto it = obj.find("topic_flags"); it != obj.end()) {
    if (!it->is_array()) throw ParseError(where + ": \"topic_flags\" must be an array");
    std::vector<bool> flags;
    for (const auto& v : *it) {
      if (!v.is_boolean()) throw ParseError(where + ": topic_flags entries must be booleans");
      flags.push_back(v.get<bool>());
    }
    r.topic_flags = std::move(flags);
  }
  return r;
}

json note_fields(const RawNote& n) {
  json obj;
  obj["id"] = n.id;
  obj["text"] = n.text;
  obj["source_tag"] = n.source_tag;
  return obj;
}

}  // namespace

Corpus parse_corpus(std::string_view jsonl, const std::string& origin) {
  std::vector<Record> records;
  std::set<std::string> ids;
  int line_no = 0;
  for (std::string_view line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::string where = origin + ": line " + std::to_string(line_no);
    Record r = parse_record(line, where);
    if (!ids.insert(r.note.id).second) throw ValidationError(where + ": duplicate id '" + r.note.id + "'");
    if (!records.empty() && records.front().labels.has_value() != r.labels.has_value()) {
      throw ValidationError(where + ": mixes labeled and unlabeled records");
    }
    records.push_back(std::move(r));
  }
  if (records.empty() || !records.front().labels) {
    std::vector<RawNote> raw;
    raw.reserve(records.size());
    for (auto& r : records) raw.push_back(std::move(r.note));
    return raw;
  }
  std::vector<LabeledNote> labeled;
  labeled.reserve(records.size());
  for (auto& r : records) {
    LabeledNote n;
    n.paragraphs = preprocess::split_paragraphs(r.note);
    n.note = std::move(r.note);
    n.labels = std::move(*r.labels);
    n.provenance = r.provenance.value_or(Provenance::Gold);
    n.topic_flags = std::move(r.topic_flags);
    validate(n);
    labeled.push_back(std::move(n));
  }
  return labeled;
}

Corpus read_corpus(const std::string& path) { return parse_corpus(detail::read_file(path), path); }

std::vector<RawNote> read_raw_corpus(const std::string& path) {
  Corpus c = read_corpus(path);
  if (auto* raw = std::get_if<std::vector<RawNote>>(&c)) return std::move(*raw);
  return raw_notes(std::get<std::vector<LabeledNote>>(c));
}

std::vector<LabeledNote> read_labeled_corpus(const std::string& path) {
  Corpus c = read_corpus(path);
  if (auto* labeled = std::get_if<std::vector<LabeledNote>>(&c)) return std::move(*labeled);
  if (std::get<std::vector<RawNote>>(c).empty()) return {};
  throw ValidationError(path + ": expected a labeled corpus (records carry no \"labels\")");
}

std::string to_jsonl(const std::vector<RawNote>& notes) {
  std::string out;
  for (const auto& n : notes) {
    out += note_fields(n).dump();
    out += '\n';
  }
  return out;
}

std::string to_jsonl(const std::vector<LabeledNote>& notes) {
  std::string out;
  for (const auto& n : notes) {
    validate(n);
    json obj = note_fields(n.note);
    json labels = json::array();
    for (SoapLabel l : n.labels) labels.push_back(std::string(display_name(l)));
    obj["labels"] = std::move(labels);
    obj["provenance"] = std::string(provenance_name(n.provenance));
    if (n.topic_flags) {
      json flags = json::array();
      for (bool f : *n.topic_flags) flags.push_back(f);
      obj["topic_flags"] = std::move(flags);
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::vector<RawNote>& notes, const std::string& path) {
  detail::write_file(path, to_jsonl(notes));
}

void write_corpus(const std::vector<LabeledNote>& notes, const std::string& path) {
  detail::write_file(path, to_jsonl(notes));
}

std::vector<RawNote> raw_notes(const std::vector<LabeledNote>& notes) {
  std::vector<RawNote> out;
  out.reserve(notes.size());
  for (const auto& n : notes) out.push_back(n.note);
  return out;
}

// ---- Generator -------------------------------------------------------------

namespace {

std::vector<std::string> words(std::initializer_list<const char*> groups) {
  std::vector<std::string> out;
  for (const char* group : groups) {
    std::istringstream is(group);
    std::string w;
    while (is >> w) out.push_back(w);
  }
  return out;
}

// Section vocabularies. The "core" lists are shared by both built-in styles;
// the rest is style specific.
constexpr const char* kSubjCore = "reports pain denies fever nausea cough fatigue headache dizziness symptoms worse improved sleep appetite";
constexpr const char* kSubjA = "complains yesterday onset intermittent constant radiating mild severe chills since";
constexpr const char* kSubjB =
    "endorses ongoing episodes bothersome occasional nightly stress mood anxious tired caregiver notes wife "
    "husband states felt lightheaded palpitations tingling numbness shortness breath exertion walking stairs";
constexpr const char* kObjCore = "bp hr temp lungs clear heart regular abdomen soft nontender exam";
constexpr const char* kObjA = "afebrile auscultation rhythm murmur wbc hemoglobin glucose creatinine weight pulse";
constexpr const char* kObjB =
    "spo2 rr bmi sodium potassium a1c edema tenderness gait reflexes sats ra ekg sinus echo ef chest xray "
    "infiltrate bilateral pitting trace strength intact sensation pupils equal";
constexpr const char* kAssessCore = "stable chronic hypertension diabetes likely improving controlled";
constexpr const char* kAssessA = "acute bronchitis infection consistent differential secondary uncomplicated";
constexpr const char* kAssessB =
    "hyperlipidemia neuropathy exacerbation resolved suspected chf copd ckd afib cad gerd osteoarthritis "
    "decompensated baseline multifactorial etiology";
constexpr const char* kPlanCore = "continue follow increase dose daily refer return";
constexpr const char* kPlanA = "start mg weeks order recheck counsel prescribed";
constexpr const char* kPlanB =
    "titrate schedule referral monitor taper diuresis lasix metoprolol statin cardiology consult pt ot "
    "discharge home tomorrow labs am telemetry";
constexpr const char* kOutA = "electronically signed attending physician md dictated transcribed copy";
constexpr const char* kOutB = "cosigned entered author status completed facility job dictating provider reviewed";

std::map<std::string, std::vector<std::string>> pools_to_json_map(
    const std::map<SoapLabel, std::vector<std::string>>& pools) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [label, items] : pools) out[std::string(display_name(label))] = items;
  return out;
}

std::map<SoapLabel, std::vector<std::string>> pools_from_json(const json& obj, const char* key) {
  std::map<SoapLabel, std::vector<std::string>> out;
  if (!obj.contains(key)) throw ConfigError(std::string("generator config: missing \"") + key + "\"");
  const json& pools = obj.at(key);
  if (!pools.is_object()) throw ConfigError(std::string("generator config: \"") + key + "\" must be an object");
  for (const auto& [name, items] : pools.items()) {
    auto label = label_from_display(name);
    if (!label) throw ConfigError(std::string("generator config: unknown label '") + name + "' in " + key);
    if (!items.is_array()) throw ConfigError(std::string("generator config: ") + key + "." + name + " must be an array");
    std::vector<std::string> list;
    for (const auto& v : items) {
      if (!v.is_string()) throw ConfigError(std::string("generator config: ") + key + "." + name + " must hold strings");
      list.push_back(v.get<std::string>());
    }
    out[*label] = std::move(list);
  }
  return out;
}

void read_range(const json& obj, const char* key, std::pair<int, int>& out) {
  if (!obj.contains(key)) return;
  const auto& range = obj.at(key);
  if (!range.is_array() || range.size() != 2) {
    throw ConfigError(std::string("generator config: ") + key + " must be [min, max]");
  }
  out = {range[0].get<int>(), range[1].get<int>()};
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string make_sentence(Rng& rng, const std::vector<std::string>& vocab, std::pair<int, int> words) {
  const int n = rng.between(words.first, words.second);
  std::string s;
  for (int i = 0; i < n; ++i) {
    std::string w = rng.bernoulli(0.05) ? std::string(kPhiToken) : rng.pick(vocab);
    if (i == 0) w = capitalize(std::move(w));
    if (i > 0) s += ' ';
    s += w;
  }
  s += '.';
  return s;
}

std::string make_body(Rng& rng, const std::vector<std::string>& vocab, const GeneratorConfig& config) {
  std::string body = make_sentence(rng, vocab, config.words_per_sentence);
  const int count = rng.between(config.sentences_per_paragraph.first, config.sentences_per_paragraph.second);
  for (int e = 1; e < count; ++e) body += " " + make_sentence(rng, vocab, config.words_per_sentence);
  return body;
}

}  // namespace

GeneratorConfig GeneratorConfig::style_a(std::uint64_t seed) {
  GeneratorConfig c;
  c.style_id = "styleA";
  c.header_pools = {
      {SoapLabel::Subjective, {"SUBJECTIVE", "Subjective"}},
      {SoapLabel::Objective, {"OBJECTIVE", "Objective"}},
      {SoapLabel::Assessment, {"ASSESSMENT", "Assessment"}},
      {SoapLabel::Plan, {"PLAN", "Plan"}},
      {SoapLabel::Out, {"Electronically signed by", "Attending"}},
  };
  c.vocab_pools = {
      {SoapLabel::Subjective, words({kSubjCore, kSubjA})},
      {SoapLabel::Objective, words({kObjCore, kObjA})},
      {SoapLabel::Assessment, words({kAssessCore, kAssessA})},
      {SoapLabel::Plan, words({kPlanCore, kPlanA})},
      {SoapLabel::Out, words({kOutA})},
  };
  c.section_omission_prob = 0.0;
  c.list_format_prob = 0.2;
  c.paragraphs_per_section = {1, 3};
  c.seed = seed;
  return c;
}

GeneratorConfig GeneratorConfig::style_b(std::uint64_t seed) {
  GeneratorConfig c;
  c.style_id = "styleB";
  c.header_pools = {
      {SoapLabel::Subjective, {"Reason for Visit", "Interval History"}},
      {SoapLabel::Objective, {"Vitals", "Exam Findings"}},
      {SoapLabel::AssessmentAndPlan, {"Impression and Recommendations", "Clinical Summary"}},
      {SoapLabel::Out, {"D", "T"}},
  };
  c.vocab_pools = {
      {SoapLabel::Subjective, words({kSubjCore, kSubjB})},
      {SoapLabel::Objective, words({kObjCore, kObjB})},
      {SoapLabel::AssessmentAndPlan,
       words({kAssessCore, kPlanCore, kAssessB, kPlanB})},
      {SoapLabel::Out, words({kOutB})},
  };
  c.section_omission_prob = 0.0;
  c.list_format_prob = 0.3;
  c.paragraphs_per_section = {1, 3};
  c.seed = seed;
  return c;
}

GeneratorConfig GeneratorConfig::builtin(const std::string& style, std::uint64_t seed) {
  if (style == "styleA") return style_a(seed);
  if (style == "styleB") return style_b(seed);
  throw ConfigError("unknown built-in style '" + style + "' (expected styleA|styleB)");
}

GeneratorConfig GeneratorConfig::load(const std::string& path) { return from_json(detail::read_file(path)); }

GeneratorConfig GeneratorConfig::from_json(std::string_view json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("generator config: ") + e.what());
  }
  GeneratorConfig c;
  try {
    c.style_id = obj.at("style_id").get<std::string>();
    c.header_pools = pools_from_json(obj, "header_pools");
    c.vocab_pools = pools_from_json(obj, "vocab_pools");
    c.section_omission_prob = obj.value("section_omission_prob", 0.0);
    c.list_format_prob = obj.value("list_format_prob", 0.2);
    read_range(obj, "paragraphs_per_section", c.paragraphs_per_section);
    read_range(obj, "sentences_per_paragraph", c.sentences_per_paragraph);
    read_range(obj, "words_per_sentence", c.words_per_sentence);
    c.seed = obj.value("seed", std::uint64_t{1});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string GeneratorConfig::to_json() const {
  json obj;
  obj["style_id"] = style_id;
  obj["header_pools"] = pools_to_json_map(header_pools);
  obj["vocab_pools"] = pools_to_json_map(vocab_pools);
  obj["section_omission_prob"] = section_omission_prob;
  obj["list_format_prob"] = list_format_prob;
  obj["paragraphs_per_section"] = {paragraphs_per_section.first, paragraphs_per_section.second};
  obj["sentences_per_paragraph"] = {sentences_per_paragraph.first, sentences_per_paragraph.second};
  obj["words_per_sentence"] = {words_per_sentence.first, words_per_sentence.second};
  obj["seed"] = seed;
  return obj.dump(2) + "\n";
}

std::vector<SoapLabel> GeneratorConfig::sections() const {
  std::vector<SoapLabel> out;
  for (SoapLabel l : {SoapLabel::Subjective, SoapLabel::Objective, SoapLabel::Assessment, SoapLabel::Plan,
                      SoapLabel::AssessmentAndPlan}) {
    if (header_pools.count(l)) out.push_back(l);
  }
  return out;
}

LabelScheme GeneratorConfig::scheme() const {
  return header_pools.count(SoapLabel::AssessmentAndPlan) ? LabelScheme::merged() : LabelScheme::standard();
}

void GeneratorConfig::validate() const {
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("generator config: ") + name + " must be in [0,1]");
  };
  check_prob(section_omission_prob, "section_omission_prob");
  check_prob(list_format_prob, "list_format_prob");
  auto check_range = [](std::pair<int, int> r, const char* name) {
    if (r.first < 1 || r.second < r.first) {
      throw ConfigError(std::string("generator config: ") + name + " must satisfy 1 <= min <= max");
    }
  };
  check_range(paragraphs_per_section, "paragraphs_per_section");
  check_range(sentences_per_paragraph, "sentences_per_paragraph");
  check_range(words_per_sentence, "words_per_sentence");
  auto secs = sections();
  if (secs.empty()) throw ConfigError("generator config: no section header pools");
  bool has_a_or_p = header_pools.count(SoapLabel::Assessment) || header_pools.count(SoapLabel::Plan);
  if (has_a_or_p && header_pools.count(SoapLabel::AssessmentAndPlan)) {
    throw ConfigError("generator config: A&P cannot be combined with separate A or P sections");
  }
  for (SoapLabel l : secs) {
    auto h = header_pools.find(l);
    if (h->second.empty()) {
      throw ConfigError("generator config: empty header pool for " + std::string(display_name(l)));
    }
    for (const auto& header : h->second) {
      if (!preprocess::extract_header(header + ": x")) {
        throw ConfigError("generator config: header '" + header + "' does not match the header pattern");
      }
    }
    auto v = vocab_pools.find(l);
    if (v == vocab_pools.end() || v->second.empty()) {
      throw ConfigError("generator config: empty vocab pool for " + std::string(display_name(l)));
    }
  }
  auto out_h = header_pools.find(SoapLabel::Out);
  auto out_v = vocab_pools.find(SoapLabel::Out);
  if (out_h == header_pools.end() || out_h->second.empty() || out_v == vocab_pools.end() || out_v->second.empty()) {
    throw ConfigError("generator config: the Out header and vocab pools are required for signature lines");
  }
}

GeneratedCorpus generate_corpus(const GeneratorConfig& config, std::size_t n) {
  config.validate();
  if (n < 1) throw ContractError("generate_corpus: n must be >= 1");
  GeneratedCorpus out;
  out.raw.reserve(n);
  out.gold.reserve(n);
  const auto sections = config.sections();
  Rng rng(detail::mix64(config.seed ^ detail::fnv1a64(config.style_id)));

  for (std::size_t k = 0; k < n; ++k) {
    std::vector<SoapLabel> present;
    for (SoapLabel s : sections) {
      if (!rng.bernoulli(config.section_omission_prob)) present.push_back(s);
    }
    if (present.empty()) present.push_back(sections[static_cast<std::size_t>(rng.below(sections.size()))]);

    std::vector<std::string> lines;
    std::vector<SoapLabel> labels;
    for (SoapLabel s : present) {
      const auto& vocab = config.vocab_pools.at(s);
      const int count = rng.between(config.paragraphs_per_section.first, config.paragraphs_per_section.second);
      for (int p = 0; p < count; ++p) {
        std::string line;
        if (p == 0) {
          line = rng.pick(config.header_pools.at(s)) + ": " + make_body(rng, vocab, config);
        } else if (rng.bernoulli(config.list_format_prob)) {
          line = "- " + make_body(rng, vocab, config);
        } else {
          line = make_body(rng, vocab, config);
        }
        lines.push_back(std::move(line));
        labels.push_back(s);
      }
    }
    if (rng.bernoulli(kTrailingOutProb)) {
      const auto& vocab = config.vocab_pools.at(SoapLabel::Out);
      lines.push_back(rng.pick(config.header_pools.at(SoapLabel::Out)) + ": " + std::string(kPhiToken) + " " +
                      make_sentence(rng, vocab, config.words_per_sentence));
      labels.push_back(SoapLabel::Out);
      if (rng.bernoulli(0.5)) {
        lines.push_back(make_sentence(rng, vocab, config.words_per_sentence));
        labels.push_back(SoapLabel::Out);
      }
    }

    RawNote note;
    note.id = config.style_id + "-" + std::to_string(config.seed) + "-" + std::to_string(k);
    note.source_tag = config.style_id;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i > 0) note.text += '\n';
      note.text += lines[i];
    }

    LabeledNote gold;
    gold.note = note;
    gold.paragraphs = preprocess::split_paragraphs(note);
    gold.labels = std::move(labels);
    gold.provenance = Provenance::Gold;
    validate(gold);
    out.raw.push_back(std::move(note));
    out.gold.push_back(std::move(gold));
  }
  return out;
}

}  // namespace soapseg::corpus
