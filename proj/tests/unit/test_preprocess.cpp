#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "soapseg/preprocess.hpp"
#include "soapseg/rng.hpp"

using namespace soapseg;
using namespace soapseg::preprocess;

namespace {

std::string source_file(const std::string& rel) {
  std::ifstream in(std::string(SOAPSEG_SOURCE_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::string alphabet = "abcXYZ &/\t:::12.-==__,;()\n";
  const std::size_t n = static_cast<std::size_t>(rng.below(max_len + 1));
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(rng.below(alphabet.size()))];
  return s;
}

// std::regex reading of the header pattern on the first line, followed by
// the two post-filters (non-empty after trimming, at most 60 characters).
std::optional<std::string> regex_header(const std::string& text) {
  static const std::regex pattern("^[A-Za-z&/ \\t]+:");
  const std::string line = text.substr(0, text.find('\n'));
  std::smatch m;
  if (!std::regex_search(line, m, pattern, std::regex_constants::match_continuous)) return std::nullopt;
  std::string h = m.str(0);
  h.pop_back();
  const auto first = h.find_first_not_of(" \t");
  if (first == std::string::npos) return std::nullopt;
  h = h.substr(first, h.find_last_not_of(" \t") - first + 1);
  if (h.size() > kMaxHeaderLength) return std::nullopt;
  std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return h;
}

}  // namespace

TEST_CASE("split_paragraphs") {
  CHECK(split_paragraphs({"n", "A\nB\nC", "t"}).size() == 3);
  auto two = split_paragraphs({"n", "A\n\n\nB", "t"});
  REQUIRE(two.size() == 2);
  CHECK(two[0].index == 0);
  CHECK(two[1].index == 1);
  CHECK(two[1].text == "B");
  CHECK(split_paragraphs({"n", "", "t"}).empty());
  CHECK(split_paragraphs({"n", "  \n\t\n", "t"}).empty());
}

TEST_CASE("normalize") {
  CHECK(normalize("====") == "=");
  CHECK(normalize("a--b==c") == "a-b=c");
  CHECK(normalize("plan: rest") == "PLAN: rest");
  CHECK(normalize("___") == "_");
  CHECK(normalize("-=-=") == "-=-=");
  CHECK(normalize("aa  bb") == "aa  bb");
  CHECK(normalize("History of present illness: cough") == "HISTORY OF PRESENT ILLNESS: cough");
}

TEST_CASE("normalize is idempotent") {
  Rng rng(101);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = random_text(rng, 40);
    const std::string once = normalize(s);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("extract_header") {
  CHECK(extract_header("ASSESSMENT: stable") == "ASSESSMENT");
  CHECK(extract_header("History of Present Illness: ...") == "HISTORY OF PRESENT ILLNESS");
  CHECK_FALSE(extract_header("3. Plan: rest").has_value());
  CHECK(extract_header("A&P: as above") == "A&P");
  CHECK(extract_header("Plan/Recs:") == "PLAN/RECS");
  CHECK_FALSE(extract_header("no colon here").has_value());
  CHECK_FALSE(extract_header(std::string(61, 'a') + ": x").has_value());
  CHECK(extract_header(std::string(60, 'a') + ": x") == std::string(60, 'A'));
}

TEST_CASE("extract_header agrees with a regex oracle") {
  Rng rng(202);
  for (int i = 0; i < 5000; ++i) {
    const std::string s = random_text(rng, 24);
    CHECK_MESSAGE(extract_header(s) == regex_header(s), "input: [" << s << "]");
  }
  for (const char* s : {"Subjective:", " \t:", "A :", "x\ty: z", "a:b:c", "&&/:", ":x"}) {
    CHECK(extract_header(s) == regex_header(s));
  }
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("He is well. Follow up in 2 weeks.").size() == 2);
  CHECK(split_sentences("BP 120/80").size() == 1);
  CHECK(split_sentences("Dr. Smith saw him.").size() == 1);
  CHECK(split_sentences("Stop! Is it bad? Yes.").size() == 3);
  CHECK(split_sentences("x").size() == 1);

  AbbreviationList none;
  CHECK(split_sentences("Dr. Smith saw him.", none).size() == 2);
}

TEST_CASE("paragraph reconstruction and sentence coverage") {
  Rng rng(303);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const int lines = 1 + static_cast<int>(rng.below(5));
    for (int l = 0; l < lines; ++l) {
      if (l) text += '\n';
      text += "Line" + std::to_string(l) + " word. Another " + std::to_string(rng.below(100)) + ".";
    }
    const auto paragraphs = split_paragraphs({"n", text, "t"});
    std::string joined;
    for (const auto& p : paragraphs) {
      if (!joined.empty()) joined += '\n';
      joined += p.text;
    }
    CHECK(split_paragraphs({"n", joined, "t"}) == paragraphs);
    for (const auto& p : paragraphs) {
      std::string glued, stripped;
      for (const auto& s : p.sentences) glued += s;
      for (char c : p.text)
        if (!std::isspace(static_cast<unsigned char>(c))) stripped += c;
      glued.erase(std::remove_if(glued.begin(), glued.end(), [](unsigned char c) { return std::isspace(c); }),
                  glued.end());
      CHECK(glued == stripped);
    }
  }
}

TEST_CASE("header lexicon") {
  HeaderLexicon lex;
  CHECK(lex.lookup("SUBJECTIVE") == SoapLabel::Subjective);
  CHECK(lex.lookup(" plan: ") == SoapLabel::Plan);
  CHECK_FALSE(lex.lookup("HISTORY").has_value());
  lex.add("history", SoapLabel::Subjective);
  CHECK(lex.lookup("HISTORY") == SoapLabel::Subjective);

  const auto defaults = HeaderLexicon::defaults();
  CHECK(defaults.lookup("HISTORY") == SoapLabel::Subjective);
  CHECK(defaults.lookup("CURRENT MEDICATION") == SoapLabel::Subjective);
  CHECK(defaults.lookup("EXAMINATION") == SoapLabel::Objective);
  for (const char* c : {"SUBJECTIVE", "OBJECTIVE", "ASSESSMENT", "PLAN"}) CHECK(defaults.lookup(c).has_value());

  CHECK_THROWS_AS(HeaderLexicon::parse("ONE\tQ\n"), ParseError);
  CHECK_THROWS_AS(HeaderLexicon::parse("NO TAB\n"), ParseError);
  auto parsed = HeaderLexicon::parse("# comment\n\nVITALS\tO\n");
  CHECK(parsed.lookup("vitals") == SoapLabel::Objective);
}

TEST_CASE("shipped data files match the compiled-in defaults") {
  const std::string dir = std::string(SOAPSEG_SOURCE_DIR) + "/data/";
  CHECK(HeaderLexicon::load(dir + "default_lexicon.tsv").entries() == HeaderLexicon::defaults().entries());

  const auto abbreviations = AbbreviationList::load(dir + "abbreviations.txt");
  std::istringstream words(source_file("data/abbreviations.txt"));
  std::string w;
  int count = 0;
  while (std::getline(words, w)) {
    if (w.empty() || w[0] == '#') continue;
    CHECK(abbreviations.contains(w));
    CHECK(AbbreviationList::defaults().contains(w));
    ++count;
  }
  CHECK(count > 0);
}

TEST_CASE("is_explicitly_structured") {
  const auto lex = HeaderLexicon::defaults();
  CHECK(is_explicitly_structured(RawNote{"n", "SUBJECTIVE: a\nOBJECTIVE: b\nASSESSMENT: c\nPLAN: d", "t"}, lex));
  CHECK_FALSE(is_explicitly_structured(RawNote{"n", "ASSESSMENT: c\nPLAN: d", "t"}, lex));
  CHECK_FALSE(is_explicitly_structured(RawNote{"n", "", "t"}, lex));
  // synonyms alone do not qualify
  CHECK_FALSE(is_explicitly_structured(RawNote{"n", "HISTORY: a\nEXAMINATION: b\nASSESSMENT: c\nPLAN: d", "t"}, lex));

  const RawNote reversed{"n", "PLAN: d\nASSESSMENT: c\nOBJECTIVE: b\nSUBJECTIVE: a", "t"};
  CHECK(is_explicitly_structured(reversed, lex));
  CHECK_FALSE(is_explicitly_structured(reversed, lex, {.strict_order = true}));
}

TEST_CASE("is_explicitly_structured is monotone under added paragraphs") {
  const auto lex = HeaderLexicon::defaults();
  const std::vector<std::string> pool = {"SUBJECTIVE: a", "OBJECTIVE: b", "ASSESSMENT: c", "PLAN: d",
                                         "free text",     "HISTORY: e",   "3. Plan: f",    "Plan: g"};
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> lines;
    bool before = false;
    for (int step = 0; step < 10; ++step) {
      const auto at = static_cast<std::ptrdiff_t>(rng.below(lines.size() + 1));
      lines.insert(lines.begin() + at, pool[static_cast<std::size_t>(rng.below(pool.size()))]);
      std::string text;
      for (const auto& l : lines) text += l + "\n";
      const bool now = is_explicitly_structured(RawNote{"n", text, "t"}, lex);
      CHECK((!before || now));
      before = now;
    }
  }
}
