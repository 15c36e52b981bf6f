#include <cmath>
#include <json.hpp>

#include "soapseg/metrics.hpp"
#include "soapseg/rng.hpp"
#include "soapseg/tagger.hpp"
#include "../util.hpp"

namespace soapseg::tagger {

Matrix to_matrix(const vectorize::NoteMatrix& m) {
  Matrix x(static_cast<Eigen::Index>(m.rows.size()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (std::size_t c = 0; c < m.rows[r].values.size(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.rows[r].values[c];
    }
  }
  return x;
}

std::vector<Example> make_examples(const std::vector<LabeledNote>& notes, const vectorize::Provider& provider,
                                   const LabelScheme& scheme) {
  std::vector<Example> out;
  out.reserve(notes.size());
  for (const auto& note : notes) {
    validate(note);
    if (note.paragraphs.empty()) continue;
    Example ex;
    ex.x = to_matrix(vectorize::vectorize_note(note, provider));
    for (SoapLabel l : note.labels) ex.labels.push_back(scheme.index_of(scheme.project(l)));
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

void check_input_dim(const TaggerModel& model, const Matrix& x, const char* where) {
  if (x.cols() != model.shape.input_dim) {
    throw DimensionError(std::string(where) + ": vectors of dimension " + std::to_string(x.cols()) +
                         " do not match model input " + std::to_string(model.shape.input_dim));
  }
}

}  // namespace

std::vector<std::vector<int>> predict(const TaggerModel& model, const std::vector<Example>& examples) {
  for (const auto& ex : examples) check_input_dim(model, ex.x, "predict");
  std::vector<std::vector<int>> out;
  out.reserve(examples.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < examples.size(); start += kChunk) {
    std::vector<const Matrix*> batch;
    for (std::size_t i = start; i < std::min(examples.size(), start + kChunk); ++i) batch.push_back(&examples[i].x);
    for (const Matrix& s : batch_forward_scores(model, batch)) out.push_back(viterbi_decode(model, s));
  }
  return out;
}

std::vector<std::vector<SoapLabel>> predict_labels(const TaggerModel& model, const std::vector<Matrix>& inputs) {
  for (const auto& x : inputs) check_input_dim(model, x, "predict");
  const LabelScheme scheme = model.scheme();
  std::vector<std::vector<SoapLabel>> out;
  out.reserve(inputs.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    std::vector<const Matrix*> batch;
    for (std::size_t i = start; i < std::min(inputs.size(), start + kChunk); ++i) batch.push_back(&inputs[i]);
    for (const Matrix& s : batch_forward_scores(model, batch)) {
      std::vector<SoapLabel> labels;
      for (int y : viterbi_decode(model, s)) labels.push_back(scheme.at(y));
      out.push_back(std::move(labels));
    }
  }
  return out;
}

double macro_f1(const TaggerModel& model, const std::vector<Example>& examples) {
  const LabelScheme scheme = model.scheme();
  const auto predicted = predict(model, examples);
  std::vector<metrics::LabelSequence> pred, gold;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    metrics::LabelSequence p, g;
    for (int y : predicted[i]) p.push_back(scheme.at(y));
    for (int y : examples[i].labels) g.push_back(scheme.at(y));
    pred.push_back(std::move(p));
    gold.push_back(std::move(g));
  }
  return metrics::evaluate(pred, gold, scheme).macro_f1;
}

std::string TrainResult::log_json() const {
  nlohmann::ordered_json obj;
  obj["best_epoch"] = best_epoch;
  obj["best_validation_macro_f1"] = best_validation_macro_f1;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const auto& e : log) {
    epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"validation_macro_f1", e.validation_macro_f1}});
  }
  obj["epochs"] = std::move(epochs);
  return obj.dump(2);
}

namespace {

struct Adam {
  Parameters first;
  Parameters second;
  long step = 0;

  explicit Adam(const ModelShape& shape) : first(Parameters::zeros(shape)), second(Parameters::zeros(shape)) {}

  void update(Parameters& params, const Parameters& grad, const Hyperparams& hp) {
    ++step;
    const double c1 = 1.0 - std::pow(hp.adam_beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(hp.adam_beta2, static_cast<double>(step));
    auto p = params.tensors();
    auto g = grad.tensors();
    auto m = first.tensors();
    auto v = second.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
      *m[i] = hp.adam_beta1 * *m[i] + (1.0 - hp.adam_beta1) * *g[i];
      *v[i] = hp.adam_beta2 * *v[i] + (1.0 - hp.adam_beta2) * g[i]->cwiseAbs2();
      const auto m_hat = m[i]->array() / c1;
      const auto v_hat = v[i]->array() / c2;
      p[i]->array() -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.adam_epsilon);
    }
  }
};

}  // namespace

TrainResult train(const TaggerModel& init, const std::vector<Example>& train_set, const std::vector<Example>& validation,
                  const Hyperparams& hyper) {
  hyper.validate();
  init.check_shapes();
  if (train_set.empty()) throw ContractError("train: empty training set");
  for (const auto& ex : train_set) {
    if (ex.x.cols() != init.shape.input_dim) {
      throw DimensionError("train: example dimension " + std::to_string(ex.x.cols()) + " does not match model input " +
                           std::to_string(init.shape.input_dim));
    }
    for (int y : ex.labels) {
      if (y < 0 || y >= init.shape.num_labels) throw ContractError("train: label index out of range");
    }
  }

  TrainResult result;
  TaggerModel model = init;
  Adam adam(model.shape);
  const std::size_t n = train_set.size();
  const auto batch_size = static_cast<std::size_t>(hyper.batch_size);
  bool have_best = false;

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    const auto order = seeded_permutation(n, detail::mix64(hyper.seed) ^ detail::mix64(static_cast<std::uint64_t>(epoch)));
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      std::vector<const Matrix*> inputs;
      std::vector<const std::vector<int>*> labels;
      for (std::size_t i = start; i < std::min(n, start + batch_size); ++i) {
        inputs.push_back(&train_set[order[i]].x);
        labels.push_back(&train_set[order[i]].labels);
      }
      LossAndGradients lg = batch_backward(model, inputs, labels);
      if (!std::isfinite(lg.loss) || !lg.gradients.all_finite()) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      epoch_loss += lg.loss;
      lg.gradients *= 1.0 / static_cast<double>(inputs.size());
      const double norm = std::sqrt(lg.gradients.squared_norm());
      if (norm > hyper.grad_clip_norm) lg.gradients *= hyper.grad_clip_norm / norm;
      adam.update(model.params, lg.gradients, hyper);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = epoch_loss / static_cast<double>(n);
    entry.validation_macro_f1 = validation.empty() ? 0.0 : macro_f1(model, validation);
    result.log.push_back(entry);

    if (validation.empty()) {
      result.model = model;
      result.best_epoch = epoch;
    } else if (!have_best || entry.validation_macro_f1 > result.best_validation_macro_f1) {
      have_best = true;
      result.model = model;
      result.best_epoch = epoch;
      result.best_validation_macro_f1 = entry.validation_macro_f1;
    }
  }
  return result;
}

}  // namespace soapseg::tagger
