#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "soapseg/preprocess.hpp"
#include "soapseg/rng.hpp"
#include "soapseg/topicseg.hpp"

using namespace soapseg;
using namespace soapseg::topicseg;

namespace {

std::vector<Paragraph> paragraphs(const std::vector<std::string>& texts) {
  std::vector<Paragraph> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Paragraph p;
    p.index = static_cast<int>(i);
    p.text = texts[i];
    p.sentences = {texts[i]};
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("trivial profiles") {
  CHECK(segment(paragraphs({"cough fever"})) == TopicFlags{false});
  CHECK(segment(paragraphs({"cough fever", "cough fever"})) == TopicFlags{false, true});
  CHECK(segment(paragraphs({"cough fever", "lisinopril refill"})) == TopicFlags{false, false});
  CHECK(segment({}).empty());
}

TEST_CASE("equal similarities mean one topic") {
  CHECK(segment(paragraphs({"alpha", "beta", "gamma", "delta"})) == TopicFlags{false, true, true, true});
  CHECK(segment(paragraphs({"alpha", "alpha", "alpha"})) == TopicFlags{false, true, true});
}

TEST_CASE("six-paragraph fixture with a shift at 3") {
  // Adjacent cosines: 2/3, 2/3, 0, 2/3, 2/3 (each pair shares two of three
  // words). Mean 8/15, population stddev 4/15, so tau = 8/15 - 2/15 = 0.4 and
  // only the 0 at index 3 falls below it.
  const auto ps = paragraphs({"fever cough chills", "fever cough headache", "cough headache chills",
                              "lisinopril dose daily", "lisinopril dose refill", "dose refill daily"});
  const auto sims = adjacent_similarities(ps);
  REQUIRE(sims.size() == 5);
  for (std::size_t i : {0u, 1u, 3u, 4u}) CHECK(sims[i] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(sims[2] == 0.0);
  CHECK(segment(ps) == TopicFlags{false, true, true, false, true, true});
}

TEST_CASE("stopwords and case are ignored") {
  const auto sims = adjacent_similarities(paragraphs({"The cough and the fever", "COUGH FEVER"}));
  CHECK(sims[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("length law, determinism and renaming invariance") {
  Rng rng(77);
  const std::vector<std::string> vocab = {"pain", "knee", "swelling", "dose", "refill", "tablet", "cough", "sputum"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> texts, renamed;
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < vocab.size(); ++i) rename[vocab[i]] = "w" + std::to_string((i * 5 + 3) % 17) + "x";
    const int n = 1 + static_cast<int>(rng.below(7));
    for (int i = 0; i < n; ++i) {
      std::string t, r;
      const int words = 1 + static_cast<int>(rng.below(6));
      for (int w = 0; w < words; ++w) {
        const auto& word = vocab[static_cast<std::size_t>(rng.below(vocab.size()))];
        t += word + " ";
        r += rename[word] + " ";
      }
      texts.push_back(t);
      renamed.push_back(r);
    }
    const auto flags = segment(paragraphs(texts));
    CHECK(flags.size() == texts.size());
    CHECK_FALSE(flags[0]);
    CHECK(segment(paragraphs(texts)) == flags);
    CHECK(segment(paragraphs(renamed)) == flags);
  }
}

TEST_CASE("stopword file matches the compiled-in list") {
  const std::string path = std::string(SOAPSEG_SOURCE_DIR) + "/data/stopwords.txt";
  const auto loaded = StopwordList::load(path);
  std::ifstream in(path);
  std::string w;
  int count = 0;
  while (std::getline(in, w)) {
    if (w.empty() || w[0] == '#') continue;
    CHECK(loaded.contains(w));
    CHECK(StopwordList::defaults().contains(w));
    ++count;
  }
  CHECK(count > 0);
}
