#include <algorithm>

#include "crf.hpp"
#include "soapseg/tagger.hpp"

namespace soapseg::tagger {

namespace {

using Eigen::Index;

// Time-major padded layout: column t * batch + b holds step t of note b.
struct BatchLayout {
  int steps = 0;
  int batch = 0;
  std::vector<int> lengths;
  // Per-note time reversal within each note's own length; padded columns map
  // to themselves. The permutation is its own inverse.
  std::vector<Index> reversal;

  Index col(int t, int b) const { return static_cast<Index>(t) * batch + b; }
  Index columns() const { return static_cast<Index>(steps) * batch; }
};

BatchLayout make_layout(const std::vector<const Matrix*>& inputs) {
  BatchLayout L;
  L.batch = static_cast<int>(inputs.size());
  for (const Matrix* x : inputs) {
    L.lengths.push_back(static_cast<int>(x->rows()));
    L.steps = std::max(L.steps, static_cast<int>(x->rows()));
  }
  L.reversal.resize(static_cast<std::size_t>(L.columns()));
  for (int b = 0; b < L.batch; ++b) {
    const int len = L.lengths[static_cast<std::size_t>(b)];
    for (int t = 0; t < L.steps; ++t) {
      L.reversal[static_cast<std::size_t>(L.col(t, b))] = t < len ? L.col(len - 1 - t, b) : L.col(t, b);
    }
  }
  return L;
}

Matrix permute_columns(const Matrix& m, const std::vector<Index>& perm) {
  Matrix out(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) out.col(c) = m.col(perm[static_cast<std::size_t>(c)]);
  return out;
}

struct DirectionCache {
  Matrix x;       // in x TB, direction-local time order
  Matrix gates;   // 4H x TB, post-activation (i, f, g, o)
  Matrix c;       // H x TB
  Matrix tanh_c;  // H x TB
  Matrix h;       // H x TB
};

template <typename Block>
void zero_padded(Block&& block, const BatchLayout& L, int t) {
  for (int b = 0; b < L.batch; ++b) {
    if (t >= L.lengths[static_cast<std::size_t>(b)]) block.col(b).setZero();
  }
}

void lstm_forward(const LstmDirection& p, const Matrix& x, const BatchLayout& L, int hidden, DirectionCache& cache) {
  const Index h = hidden, tb = L.columns(), B = L.batch;
  cache.x = x;
  cache.gates.noalias() = p.w_input * x;
  cache.gates.colwise() += p.bias.col(0);
  cache.c.setZero(h, tb);
  cache.tanh_c.setZero(h, tb);
  cache.h.setZero(h, tb);
  for (int t = 0; t < L.steps; ++t) {
    auto g = cache.gates.middleCols(static_cast<Index>(t) * B, B);
    if (t > 0) g.noalias() += p.w_recurrent * cache.h.middleCols(static_cast<Index>(t - 1) * B, B);
    g.topRows(2 * h) = (1.0 + (-g.topRows(2 * h).array()).exp()).inverse().matrix();
    g.middleRows(2 * h, h) = g.middleRows(2 * h, h).array().tanh().matrix();
    g.bottomRows(h) = (1.0 + (-g.bottomRows(h).array()).exp()).inverse().matrix();

    auto c = cache.c.middleCols(static_cast<Index>(t) * B, B);
    c = g.topRows(h).cwiseProduct(g.middleRows(2 * h, h));
    if (t > 0) c += g.middleRows(h, h).cwiseProduct(cache.c.middleCols(static_cast<Index>(t - 1) * B, B));
    auto tc = cache.tanh_c.middleCols(static_cast<Index>(t) * B, B);
    tc = c.array().tanh().matrix();
    auto hh = cache.h.middleCols(static_cast<Index>(t) * B, B);
    hh = g.bottomRows(h).cwiseProduct(tc);

    zero_padded(g, L, t);
    zero_padded(c, L, t);
    zero_padded(tc, L, t);
    zero_padded(hh, L, t);
  }
}

// Accumulates parameter gradients into `grad` and returns dLoss/dx.
Matrix lstm_backward(const LstmDirection& p, const DirectionCache& cache, const Matrix& d_h, const BatchLayout& L,
                     int hidden, LstmDirection& grad) {
  const Index h = hidden, tb = L.columns(), B = L.batch;
  Matrix d_gates(4 * h, tb);
  Matrix dh_next = Matrix::Zero(h, B);
  Matrix dc_next = Matrix::Zero(h, B);
  for (int t = L.steps - 1; t >= 0; --t) {
    const Index c0 = static_cast<Index>(t) * B;
    const auto g = cache.gates.middleCols(c0, B).array();
    const auto ig = g.topRows(h), fg = g.middleRows(h, h), gg = g.middleRows(2 * h, h), og = g.bottomRows(h);
    const auto tc = cache.tanh_c.middleCols(c0, B).array();

    Eigen::ArrayXXd dh = d_h.middleCols(c0, B).array() + dh_next.array();
    Eigen::ArrayXXd dc = dc_next.array() + dh * og * (1.0 - tc.square());
    Eigen::ArrayXXd c_prev = t > 0 ? Eigen::ArrayXXd(cache.c.middleCols(c0 - B, B).array())
                                   : Eigen::ArrayXXd::Zero(h, B);

    auto dg = d_gates.middleCols(c0, B);
    dg.topRows(h) = (dc * gg * ig * (1.0 - ig)).matrix();
    dg.middleRows(h, h) = (dc * c_prev * fg * (1.0 - fg)).matrix();
    dg.middleRows(2 * h, h) = (dc * ig * (1.0 - gg.square())).matrix();
    dg.bottomRows(h) = (dh * tc * og * (1.0 - og)).matrix();
    zero_padded(dg, L, t);

    dc_next = (dc * fg).matrix();
    for (int b = 0; b < L.batch; ++b) {
      if (t >= L.lengths[static_cast<std::size_t>(b)]) dc_next.col(b).setZero();
    }
    dh_next.noalias() = p.w_recurrent.transpose() * dg;
  }
  grad.w_input.noalias() += d_gates * cache.x.transpose();
  grad.bias += d_gates.rowwise().sum();
  if (L.steps > 1) {
    grad.w_recurrent.noalias() += d_gates.rightCols(tb - B) * cache.h.leftCols(tb - B).transpose();
  }
  return p.w_input.transpose() * d_gates;
}

struct NetworkCache {
  BatchLayout layout;
  std::vector<DirectionCache> directions;  // 2 * layer + dir
  Matrix top;                              // 2H x TB
  Matrix scores;                           // K x TB
};

void check_inputs(const TaggerModel& model, const std::vector<const Matrix*>& inputs) {
  if (inputs.empty()) throw ContractError("forward: empty batch");
  for (const Matrix* x : inputs) {
    if (x->rows() < 1) throw ContractError("forward: a note has no paragraphs");
    if (x->cols() != model.shape.input_dim) {
      throw ContractError("forward: input dimension " + std::to_string(x->cols()) + " does not match model dimension " +
                          std::to_string(model.shape.input_dim));
    }
  }
}

void network_forward(const TaggerModel& model, const std::vector<const Matrix*>& inputs, NetworkCache& cache) {
  check_inputs(model, inputs);
  const int hidden = model.shape.hidden;
  cache.layout = make_layout(inputs);
  const BatchLayout& L = cache.layout;

  Matrix layer_in = Matrix::Zero(model.shape.input_dim, L.columns());
  for (int b = 0; b < L.batch; ++b) {
    const Matrix& x = *inputs[static_cast<std::size_t>(b)];
    for (int t = 0; t < L.lengths[static_cast<std::size_t>(b)]; ++t) layer_in.col(L.col(t, b)) = x.row(t).transpose();
  }

  cache.directions.assign(static_cast<std::size_t>(2 * model.shape.layers), {});
  for (int l = 0; l < model.shape.layers; ++l) {
    auto& fwd = cache.directions[static_cast<std::size_t>(2 * l)];
    auto& bwd = cache.directions[static_cast<std::size_t>(2 * l + 1)];
    lstm_forward(model.params.lstm[static_cast<std::size_t>(2 * l)], layer_in, L, hidden, fwd);
    lstm_forward(model.params.lstm[static_cast<std::size_t>(2 * l + 1)], permute_columns(layer_in, L.reversal), L,
                 hidden, bwd);
    Matrix out(2 * hidden, L.columns());
    out.topRows(hidden) = fwd.h;
    out.bottomRows(hidden) = permute_columns(bwd.h, L.reversal);
    layer_in = std::move(out);
  }
  cache.top = std::move(layer_in);
  cache.scores.noalias() = model.params.proj_weight * cache.top;
  cache.scores.colwise() += model.params.proj_bias.col(0);
}

Matrix note_scores(const NetworkCache& cache, int b) {
  const BatchLayout& L = cache.layout;
  const int len = L.lengths[static_cast<std::size_t>(b)];
  Matrix s(len, cache.scores.rows());
  for (int t = 0; t < len; ++t) s.row(t) = cache.scores.col(L.col(t, b)).transpose();
  return s;
}

}  // namespace

std::vector<Matrix> batch_forward_scores(const TaggerModel& model, const std::vector<const Matrix*>& inputs) {
  NetworkCache cache;
  network_forward(model, inputs, cache);
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  for (int b = 0; b < cache.layout.batch; ++b) out.push_back(note_scores(cache, b));
  return out;
}

Matrix forward_scores(const TaggerModel& model, const Matrix& x) {
  return std::move(batch_forward_scores(model, {&x}).front());
}

double sequence_score(const TaggerModel& model, const Matrix& scores, const std::vector<int>& labels) {
  return crf::sequence_score(crf::view_of(model.params), scores, labels);
}

double partition(const TaggerModel& model, const Matrix& scores) {
  return crf::log_partition(crf::view_of(model.params), scores);
}

std::vector<int> viterbi_decode(const TaggerModel& model, const Matrix& scores) {
  return crf::viterbi(crf::view_of(model.params), scores);
}

double nll_loss(const TaggerModel& model, const Matrix& x, const std::vector<int>& labels) {
  const Matrix s = forward_scores(model, x);
  return partition(model, s) - sequence_score(model, s, labels);
}

LossAndGradients batch_backward(const TaggerModel& model, const std::vector<const Matrix*>& inputs,
                                const std::vector<const std::vector<int>*>& labels) {
  if (inputs.size() != labels.size()) throw ContractError("batch_backward: inputs and labels differ in count");
  NetworkCache cache;
  network_forward(model, inputs, cache);
  const BatchLayout& L = cache.layout;
  const int hidden = model.shape.hidden;

  LossAndGradients out;
  out.gradients = Parameters::zeros(model.shape);
  Parameters& grad = out.gradients;
  const crf::View view = crf::view_of(model.params);

  Matrix d_scores = Matrix::Zero(cache.scores.rows(), L.columns());
  for (int b = 0; b < L.batch; ++b) {
    const Matrix s = note_scores(cache, b);
    Matrix ds;
    out.loss += crf::nll_and_gradients(view, s, *labels[static_cast<std::size_t>(b)], ds, grad.transitions, grad.start,
                                       grad.stop);
    for (int t = 0; t < L.lengths[static_cast<std::size_t>(b)]; ++t) d_scores.col(L.col(t, b)) = ds.row(t).transpose();
  }

  grad.proj_weight.noalias() = d_scores * cache.top.transpose();
  grad.proj_bias = d_scores.rowwise().sum();
  Matrix d_top = model.params.proj_weight.transpose() * d_scores;

  for (int l = model.shape.layers - 1; l >= 0; --l) {
    const auto fi = static_cast<std::size_t>(2 * l), bi = static_cast<std::size_t>(2 * l + 1);
    const Matrix d_fwd = d_top.topRows(hidden);
    const Matrix d_bwd = permute_columns(d_top.bottomRows(hidden), L.reversal);
    Matrix dx = lstm_backward(model.params.lstm[fi], cache.directions[fi], d_fwd, L, hidden, grad.lstm[fi]);
    dx += permute_columns(
        lstm_backward(model.params.lstm[bi], cache.directions[bi], d_bwd, L, hidden, grad.lstm[bi]), L.reversal);
    d_top = std::move(dx);
  }
  return out;
}

LossAndGradients backward(const TaggerModel& model, const Matrix& x, const std::vector<int>& labels) {
  return batch_backward(model, {&x}, {&labels});
}

}  // namespace soapseg::tagger
