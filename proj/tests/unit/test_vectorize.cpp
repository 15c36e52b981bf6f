#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "soapseg/corpus.hpp"
#include "soapseg/preprocess.hpp"
#include "soapseg/rng.hpp"
#include "soapseg/vectorize.hpp"

using namespace soapseg;
using namespace soapseg::vectorize;
namespace fs = std::filesystem;

namespace {

double dot(const ParagraphVector& a, const ParagraphVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += static_cast<double>(a.values[i]) * b.values[i];
  return s;
}

ParagraphVector vec(std::initializer_list<float> v) { return ParagraphVector{std::vector<float>(v)}; }

}  // namespace

TEST_CASE("hashed_vectorize basics") {
  const auto zero = hashed_vectorize("", 256);
  CHECK(zero.dim() == 256);
  CHECK(dot(zero, zero) == 0.0);
  CHECK(hashed_vectorize("Cough at night", 256) == hashed_vectorize("Cough at night", 256));
  CHECK(hashed_vectorize("COUGH, at night!", 64) == hashed_vectorize("cough at night", 64));
  CHECK_THROWS_AS(hashed_vectorize("x", 100), ContractError);
  CHECK_THROWS_AS(hashed_vectorize("x", 4), ContractError);
}

TEST_CASE("bigram sensitivity") {
  // FNV-1a/splitmix64 recomputed outside the library gives 1/sqrt(3).
  const double c = dot(hashed_vectorize("a b", 256), hashed_vectorize("b a", 256));
  CHECK(c < 1.0);
  CHECK(c == doctest::Approx(0.5773502691896258).epsilon(1e-6));
}

TEST_CASE("hashed vector fixture") {
  // Seven features into 16 buckets: bucket 0 collects two same-sign hits.
  const auto v = hashed_vectorize("Cough worse at night", 16);
  const double r7 = 1.0 / std::sqrt(7.0);
  for (std::size_t i = 0; i < 16; ++i) {
    double expected = 0.0;
    if (i == 0) expected = 2 * r7;
    if (i == 8) expected = -r7;
    if (i == 10 || i == 13) expected = r7;
    CHECK(v.values[i] == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("hashed vectors have unit norm") {
  auto g = corpus::generate_corpus(corpus::GeneratorConfig::style_b(3), 20);
  for (const auto& note : g.gold)
    for (const auto& p : note.paragraphs) CHECK(std::sqrt(dot(hashed_vectorize(p, 256), hashed_vectorize(p, 256))) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pool_sentences") {
  const auto v = vec({1.0f, -2.0f, 0.5f});
  CHECK(pool_sentences(std::vector{v}) == v);
  const auto neg = vec({-1.0f, 2.0f, -0.5f});
  CHECK(pool_sentences(std::vector{v, neg}) == vec({0.0f, 0.0f, 0.0f}));
  const auto m = pool_sentences(std::vector{vec({1, 0}), vec({0, 1}), vec({1, 1})});
  CHECK(m.values[0] == doctest::Approx(2.0 / 3.0));
  CHECK(m.values[1] == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(pool_sentences(std::vector<ParagraphVector>{}), ContractError);
  CHECK_THROWS_AS(pool_sentences(std::vector{vec({1}), vec({1, 2})}), ContractError);
}

TEST_CASE("pool_sentences permutation invariance and translation equivariance") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    std::vector<ParagraphVector> vs, shifted;
    std::vector<float> shift(6);
    for (auto& s : shift) s = static_cast<float>(rng.uniform(-1, 1));
    for (int i = 0; i < n; ++i) {
      ParagraphVector v{std::vector<float>(6)}, w{std::vector<float>(6)};
      for (std::size_t k = 0; k < 6; ++k) {
        v.values[k] = static_cast<float>(rng.uniform(-1, 1));
        w.values[k] = v.values[k] + shift[k];
      }
      vs.push_back(v);
      shifted.push_back(w);
    }
    const auto base = pool_sentences(vs);
    auto permuted = vs;
    rng.shuffle(permuted);
    const auto p = pool_sentences(permuted);
    const auto s = pool_sentences(shifted);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(p.values[k] == doctest::Approx(base.values[k]).epsilon(1e-6));
      CHECK(s.values[k] == doctest::Approx(base.values[k] + shift[k]).epsilon(1e-5));
    }
  }
}

TEST_CASE("embedding file round trip is bit exact") {
  EmbeddingTable table(3);
  table.add("n1#0", vec({0.1f, -2.5f, 3.0e-20f}));
  table.add("n1#1", vec({1e30f, 0.0f, -0.0f}));
  table.add("n\xc3\xa9#0", vec({7, 8, 9}));
  const std::string bytes = encode_embeddings(table);
  CHECK(bytes.substr(0, 8) == "SOAPVEC1");
  CHECK(bytes.size() == 8 + 4 + 8 + 3 * 4 + (4 + 4 + 5) + 9 * 4);
  const auto back = decode_embeddings(bytes);
  CHECK(back == table);
  CHECK(encode_embeddings(back) == bytes);

  const auto path = fs::temp_directory_path() / "soapseg_unit_vec.bin";
  save_embeddings(table, path.string());
  CHECK(load_embeddings(path.string()) == table);
}

TEST_CASE("embedding file errors") {
  EmbeddingTable table(2);
  table.add("a#0", vec({1, 2}));
  table.add("a#1", vec({3, 4}));
  const std::string good = encode_embeddings(table);

  std::string magic = good;
  magic.replace(0, 8, "XVEC\0\0\0\0", 8);
  CHECK_THROWS_AS(decode_embeddings(magic), FormatError);

  // count says 2, one record present
  EmbeddingTable one(2);
  one.add("a#0", vec({1, 2}));
  std::string truncated = encode_embeddings(one);
  truncated[12] = 2;
  try {
    decode_embeddings(truncated);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }

  // duplicate key
  std::string dup = good;
  const std::size_t second_key = 8 + 4 + 8 + 4 + 3 + 8 + 4;
  dup[second_key + 2] = '0';
  CHECK_THROWS_AS(decode_embeddings(dup), ValidationError);

  CHECK_THROWS_AS(decode_embeddings(good + "x"), FormatError);
  CHECK_THROWS_AS(table.add("b#0", vec({1, 2, 3})), ValidationError);
}

TEST_CASE("vectorize_note and providers") {
  auto g = corpus::generate_corpus(corpus::GeneratorConfig::style_a(2), 3);
  HashedProvider hashed(64);
  for (const auto& note : g.gold) {
    const auto m = vectorize_note(note, hashed);
    CHECK(m.rows.size() == note.paragraphs.size());
    CHECK(m.dim() == 64);
    CHECK(vectorize_note(note, hashed) == m);
  }
  const auto matrices = vectorize_corpus(g.gold, hashed);
  FileProvider file(to_table(matrices));
  CHECK(file.dim() == 64);
  for (std::size_t i = 0; i < g.gold.size(); ++i) CHECK(vectorize_note(g.gold[i], file) == matrices[i]);

  LabeledNote missing = g.gold[0];
  missing.note.id = "absent-note";
  try {
    vectorize_note(missing, file);
    FAIL("expected a lookup error");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("absent-note#0") != std::string::npos);
  }
  CHECK(embedding_key("n1", 0) == "n1#0");
  CHECK_THROWS_AS(HashedProvider(12), ConfigError);
}
