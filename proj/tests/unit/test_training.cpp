#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "soapseg/corpus.hpp"
#include "soapseg/tagger.hpp"
#include "soapseg/weaklabel.hpp"

using namespace soapseg;
using namespace soapseg::tagger;
using soapseg::testing::random_matrix;

namespace {

Hyperparams small_hyper(std::uint64_t seed) {
  Hyperparams h;
  h.layers = 1;
  h.hidden = 16;
  h.seed = seed;
  return h;
}

// Label k sits at coordinate 0 = k - 2; the other coordinates are noise.
std::vector<Example> separable(std::size_t notes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < notes; ++i) {
    Example ex;
    const int n = 2 + static_cast<int>(rng.below(6));
    ex.x = random_matrix(rng, n, 6, 0.3);
    for (int t = 0; t < n; ++t) {
      const int y = static_cast<int>(rng.below(5));
      ex.x(t, 0) = y - 2.0;
      ex.labels.push_back(y);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> weak_examples(std::uint64_t seed, std::size_t count, int dim) {
  const auto g = corpus::generate_corpus(corpus::GeneratorConfig::style_a(seed), count);
  const auto weak = weaklabel::build_weak_corpus(g.raw, preprocess::HeaderLexicon::defaults());
  return make_examples(weak.notes, vectorize::HashedProvider(dim), LabelScheme::standard());
}

}  // namespace

TEST_CASE("one large gradient step lowers the loss") {
  auto m = TaggerModel::initialize({4, 5, 2, 3}, 6);
  Rng rng(6);
  const Matrix x = random_matrix(rng, 4, 4, 1.0);
  const std::vector<int> y{0, 1, 2, 3};
  const auto lg = backward(m, x, y);
  auto stepped = m;
  auto step = lg.gradients;
  step *= -0.05;
  stepped.params += step;
  CHECK(nll_loss(stepped, x, y) < lg.loss);
}

TEST_CASE("training is deterministic given the seed") {
  const auto data = weak_examples(4, 24, 64);
  const auto init = TaggerModel::initialize({64, 5, 1, 16}, 3);
  Hyperparams h = small_hyper(3);
  h.batch_size = 8;
  h.max_epochs = 3;
  const auto a = train(init, data, {}, h);
  const auto b = train(init, data, {}, h);
  CHECK(a.model.params == b.model.params);
  CHECK(a.log_json() == b.log_json());
  h.seed = 4;
  CHECK_FALSE(train(init, data, {}, h).model.params == a.model.params);
}

TEST_CASE("training raises train macro-F1 on a 20-note corpus") {
  const auto data = weak_examples(8, 20, 128);
  REQUIRE(data.size() == 20);
  const auto init = TaggerModel::initialize({128, 5, 1, 32}, 2);
  Hyperparams h = small_hyper(2);
  h.hidden = 32;
  const auto result = train(init, data, {}, h);
  CHECK(result.log.size() == 10);
  CHECK(result.best_epoch == 10);
  CHECK(result.log.back().mean_loss < result.log.front().mean_loss);
  CHECK(macro_f1(result.model, data) > macro_f1(init, data));
}

TEST_CASE("separable toy corpus is learned exactly") {
  const auto train_set = separable(256, 1);
  const auto validation = separable(32, 2);
  const auto init = TaggerModel::initialize({6, 5, 1, 16}, 1);
  Hyperparams h = small_hyper(1);
  h.batch_size = 8;
  const auto result = train(init, train_set, validation, h);
  CHECK(result.best_validation_macro_f1 == 1.0);
  CHECK(result.best_epoch <= 10);
  CHECK(macro_f1(result.model, validation) == 1.0);

  // the selected checkpoint survives a save/load round trip
  const auto back = decode_model(encode_model(result.model));
  CHECK(predict(back, validation) == predict(result.model, validation));
}

TEST_CASE("non-finite input aborts with epoch and batch") {
  auto data = separable(10, 3);
  data[7].x(0, 1) = std::numeric_limits<double>::quiet_NaN();
  Hyperparams h = small_hyper(1);
  h.batch_size = 4;
  try {
    train(TaggerModel::initialize({6, 5, 1, 16}, 1), data, {}, h);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("training preconditions") {
  const auto init = TaggerModel::initialize({6, 5, 1, 16}, 1);
  CHECK_THROWS_AS(train(init, {}, {}, small_hyper(1)), ContractError);
  auto wrong = separable(2, 1);
  wrong[0].x = Matrix::Zero(2, 7);
  CHECK_THROWS_AS(train(init, wrong, {}, small_hyper(1)), DimensionError);
  CHECK_THROWS_AS(predict(init, wrong), DimensionError);
}

TEST_CASE("hyperparameters") {
  const Hyperparams d;
  CHECK(d.batch_size == 64);
  CHECK(d.learning_rate == 5e-3);
  CHECK(d.max_epochs == 10);
  CHECK(d.hidden == 128);
  CHECK(d.layers == 3);
  CHECK(d.grad_clip_norm == 5.0);

  const auto h = Hyperparams::from_json(R"({"hidden": 32, "learning_rate": 0.01})");
  CHECK(h.hidden == 32);
  CHECK(h.learning_rate == 0.01);
  CHECK(h.batch_size == 64);
  const auto back = Hyperparams::from_json(h.to_json());
  CHECK(back.to_json() == h.to_json());

  CHECK_THROWS_AS(Hyperparams::from_json(R"({"batch_size": 0})").validate(), ConfigError);
  CHECK_THROWS_AS(Hyperparams::from_json(R"({"learning_rate": -1})").validate(), ConfigError);
  CHECK_THROWS_AS(Hyperparams::from_json(R"({"hidden": "many"})"), ConfigError);
}

TEST_CASE("make_examples projects labels into the scheme") {
  const auto g = corpus::generate_corpus(corpus::GeneratorConfig::style_b(5), 6);
  const auto merged = make_examples(g.gold, vectorize::HashedProvider(32), LabelScheme::merged());
  REQUIRE(merged.size() == g.gold.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CHECK(merged[i].x.rows() == static_cast<Eigen::Index>(g.gold[i].paragraphs.size()));
    for (int y : merged[i].labels) CHECK((y >= 0 && y < 4));
  }
}
