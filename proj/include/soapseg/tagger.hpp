#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "soapseg/types.hpp"
#include "soapseg/vectorize.hpp"

namespace soapseg::tagger {

using Matrix = Eigen::MatrixXd;

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'S', 'O', 'A', 'P', 'T', 'A', 'G', '1'};

struct Hyperparams {
  int batch_size = 64;
  double learning_rate = 5e-3;
  int max_epochs = 10;
  int layers = 3;
  int hidden = 128;  // per direction
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  // Keys as the field names; absent keys keep their defaults.
  static Hyperparams from_json(std::string_view json_text);
  std::string to_json() const;
};

struct ModelShape {
  int input_dim = 0;
  int num_labels = 0;
  int layers = 3;
  int hidden = 128;

  bool operator==(const ModelShape&) const = default;
};

// Gate rows are ordered input, forget, cell, output.
struct LstmDirection {
  Matrix w_input;      // 4H x in
  Matrix w_recurrent;  // 4H x H
  Matrix bias;         // 4H x 1
};

// Every learnable tensor. Also used as the gradient container.
struct Parameters {
  std::vector<LstmDirection> lstm;  // index 2 * layer + direction (0 forward, 1 backward)
  Matrix proj_weight;               // K x 2H
  Matrix proj_bias;                 // K x 1
  Matrix transitions;               // K x K, [from][to]
  Matrix start;                     // K x 1
  Matrix stop;                      // K x 1

  static Parameters zeros(const ModelShape& shape);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::string> tensor_names() const;

  void set_zero();
  Parameters& operator+=(const Parameters& other);
  Parameters& operator*=(double scale);
  double squared_norm() const;
  bool all_finite() const;
  bool operator==(const Parameters& other) const;
};

struct TaggerModel {
  ModelShape shape;
  Parameters params;
  std::uint32_t version = kCheckpointVersion;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; LSTM tensors use
  // fan_in = in + H, the projection 2H, the CRF tensors K.
  static TaggerModel initialize(const ModelShape& shape, std::uint64_t seed);

  // K = 5 -> standard, K = 4 -> merged.
  LabelScheme scheme() const;
  void check_shapes() const;
};

// ---- Scoring ----------------------------------------------------------------

// X is n x d (one row per paragraph). Returns S, n x K.
Matrix forward_scores(const TaggerModel& model, const Matrix& x);

// Log-domain path score: start[y0] + sum S[i][yi] + sum T[yi][yi+1] + stop[y_{n-1}].
double sequence_score(const TaggerModel& model, const Matrix& scores, const std::vector<int>& labels);
// log Z by the forward algorithm.
double partition(const TaggerModel& model, const Matrix& scores);
// Exact argmax; ties go to the lowest label index at every backtrack step.
std::vector<int> viterbi_decode(const TaggerModel& model, const Matrix& scores);

double nll_loss(const TaggerModel& model, const Matrix& x, const std::vector<int>& labels);

struct LossAndGradients {
  double loss = 0.0;  // summed over the notes
  Parameters gradients;
};

// Exact gradients of nll_loss for one note.
LossAndGradients backward(const TaggerModel& model, const Matrix& x, const std::vector<int>& labels);

// Padded mini-batch. Loss and gradients are sums over the notes; padded
// steps are masked out of the recurrence, the loss and the CRF chain.
LossAndGradients batch_backward(const TaggerModel& model, const std::vector<const Matrix*>& inputs,
                                const std::vector<const std::vector<int>*>& labels);
std::vector<Matrix> batch_forward_scores(const TaggerModel& model, const std::vector<const Matrix*>& inputs);

// ---- Training ---------------------------------------------------------------

struct Example {
  Matrix x;                // n x d
  std::vector<int> labels; // scheme indices
};

Matrix to_matrix(const vectorize::NoteMatrix& m);
std::vector<Example> make_examples(const std::vector<LabeledNote>& notes, const vectorize::Provider& provider,
                                   const LabelScheme& scheme);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;  // per note
  double validation_macro_f1 = 0.0;
};

struct TrainResult {
  TaggerModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_validation_macro_f1 = 0.0;

  std::string log_json() const;
};

// Adam over mean-per-note batch gradients with global-norm clipping. Returns
// the epoch checkpoint with the best validation macro-F1 (earliest on ties;
// the final epoch when no validation set is given). Throws NumericError on a
// non-finite loss.
TrainResult train(const TaggerModel& init, const std::vector<Example>& train_set,
                  const std::vector<Example>& validation, const Hyperparams& hyper);

std::vector<std::vector<int>> predict(const TaggerModel& model, const std::vector<Example>& examples);
std::vector<std::vector<SoapLabel>> predict_labels(const TaggerModel& model, const std::vector<Matrix>& inputs);

// Corpus-level macro-F1 of Viterbi predictions against the examples' labels.
double macro_f1(const TaggerModel& model, const std::vector<Example>& examples);

// ---- Transfer ---------------------------------------------------------------

using LabelMap = std::map<SoapLabel, SoapLabel>;  // source label -> target label

LabelMap identity_map(const LabelScheme& scheme);
// S->S, O->O, A->A&P, P->A&P, Out->Out.
LabelMap merge_assessment_plan_map();

// LSTM tensors copied verbatim; each target label's projection row, bias,
// start/stop entry is the mean over its source labels; each transition is the
// mean over all mapped source pairs. Throws ConfigError when a target label
// has no source.
TaggerModel transfer_init(const TaggerModel& source, const LabelMap& map, const LabelScheme& target);

// ---- Checkpoints ("SOAPTAG1") -----------------------------------------------
//
//   magic 8 bytes, version u32, input_dim u32, num_labels u32, layers u32,
//   hidden u32, tensor_count u32, then per tensor: rows u32, cols u32,
//   rows*cols float64 (row-major). All little-endian.

std::string encode_model(const TaggerModel& model);
TaggerModel decode_model(std::string_view bytes, const std::string& origin = "<memory>");
void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

}  // namespace soapseg::tagger
