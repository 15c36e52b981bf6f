#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "soapseg/tagger.hpp"

using namespace soapseg;
using namespace soapseg::tagger;
using soapseg::testing::enumerate_crf;
using soapseg::testing::random_crf_model;
using soapseg::testing::random_matrix;

namespace {

TaggerModel zero_model(int k) {
  TaggerModel m = TaggerModel::initialize({4, k, 1, 2}, 1);
  m.params.set_zero();
  return m;
}

}  // namespace

TEST_CASE("closed forms") {
  auto m = random_crf_model(5, 3);
  Rng rng(1);
  const Matrix s = random_matrix(rng, 1, 5, 1.0);
  double lse = 0.0;
  int best = 0;
  for (int k = 0; k < 5; ++k) {
    const double v = m.params.start(k, 0) + s(0, k) + m.params.stop(k, 0);
    lse += std::exp(v);
    if (v > m.params.start(best, 0) + s(0, best) + m.params.stop(best, 0)) best = k;
  }
  CHECK(partition(m, s) == doctest::Approx(std::log(lse)).epsilon(1e-12));
  CHECK(viterbi_decode(m, s) == std::vector<int>{best});
  for (int k = 0; k < 5; ++k) {
    CHECK(sequence_score(m, s, {k}) == doctest::Approx(m.params.start(k, 0) + s(0, k) + m.params.stop(k, 0)));
  }

  auto z = zero_model(5);
  const Matrix zeros = Matrix::Zero(2, 5);
  CHECK(partition(z, zeros) == doctest::Approx(std::log(25.0)).epsilon(1e-14));
  CHECK(sequence_score(z, zeros, {3, 1}) == 0.0);
  CHECK(viterbi_decode(z, Matrix::Zero(4, 5)) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("scoring errors") {
  auto m = random_crf_model(5, 1);
  const Matrix s = Matrix::Zero(2, 5);
  CHECK_THROWS_AS(sequence_score(m, s, {0}), ContractError);
  CHECK_THROWS_AS(sequence_score(m, s, {0, 5}), ContractError);
  CHECK_THROWS_AS(partition(m, Matrix::Zero(0, 5)), ContractError);
  CHECK_THROWS_AS(viterbi_decode(m, Matrix::Zero(2, 4)), ContractError);
}

TEST_CASE("enumeration oracle") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    for (int k : {4, 5}) {
      auto m = random_crf_model(k, seed);
      Rng rng(seed + 500);
      const int n = 1 + static_cast<int>(seed % 5);
      const Matrix s = random_matrix(rng, n, k, 3.0);
      const auto truth = enumerate_crf(m.params, s);
      const auto decoded = viterbi_decode(m, s);
      CHECK(decoded == truth.argmax);
      CHECK(sequence_score(m, s, decoded) == doctest::Approx(truth.best).epsilon(1e-12));
      const double log_z = partition(m, s);
      CHECK(std::abs(log_z - truth.log_z) <= 1e-9 * std::abs(truth.log_z));

      double total = 0.0;
      testing::for_each_sequence(n, k, [&](const std::vector<int>& y) {
        const double v = sequence_score(m, s, y);
        CHECK(v == doctest::Approx(testing::path_score(m.params, s, y)).epsilon(1e-12));
        CHECK(v <= sequence_score(m, s, decoded) + 1e-12);
        total += std::exp(v - log_z);
      });
      CHECK(std::abs(total - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("decoding ignores a constant shift of the scores") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto m = random_crf_model(5, seed);
    Rng rng(seed);
    const Matrix s = random_matrix(rng, 1 + static_cast<int>(seed % 6), 5, 2.0);
    const double c = rng.uniform(-50, 50);
    CHECK(viterbi_decode(m, s.array() + c) == viterbi_decode(m, s));
  }
}

TEST_CASE("nll_loss limits") {
  // all-zero model, one paragraph: uniform over five labels
  auto z = zero_model(5);
  const Matrix x = Matrix::Constant(1, 4, 0.3);
  CHECK(nll_loss(z, x, {2}) == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  // huge gold score saturates the loss
  auto m = zero_model(5);
  m.params.proj_bias(1, 0) = 1e4;
  CHECK(nll_loss(m, Matrix::Constant(3, 4, 0.1), {1, 1, 1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nll_loss equals enumerated cross-entropy") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto m = TaggerModel::initialize({4, 5, 2, 3}, seed);
    Rng rng(seed + 77);
    const Matrix x = random_matrix(rng, 3, 4, 1.0);
    const std::vector<int> y = {static_cast<int>(seed % 5), 2, static_cast<int>((seed * 3) % 5)};
    const Matrix s = forward_scores(m, x);
    const auto truth = enumerate_crf(m.params, s);
    CHECK(nll_loss(m, x, y) == doctest::Approx(truth.log_z - testing::path_score(m.params, s, y)).epsilon(1e-12));
    CHECK(nll_loss(m, x, y) >= 0.0);
  }
}
