#include <bit>
#include <cmath>
#include <cstring>
#include <json.hpp>

#include "soapseg/rng.hpp"
#include "soapseg/tagger.hpp"
#include "../util.hpp"

namespace soapseg::tagger {

void Hyperparams::validate() const {
  if (batch_size <= 0 || max_epochs <= 0 || layers <= 0 || hidden <= 0) {
    throw ConfigError("hyperparams: batch_size, max_epochs, layers and hidden must be positive");
  }
  if (!(learning_rate > 0.0) || !(grad_clip_norm > 0.0)) {
    throw ConfigError("hyperparams: learning_rate and grad_clip_norm must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("hyperparams: invalid Adam moments");
  }
}

Hyperparams Hyperparams::from_json(std::string_view json_text) {
  Hyperparams h;
  try {
    auto obj = nlohmann::json::parse(json_text);
    if (!obj.is_object()) throw ConfigError("hyperparams: expected a JSON object");
    h.batch_size = obj.value("batch_size", h.batch_size);
    h.learning_rate = obj.value("learning_rate", h.learning_rate);
    h.max_epochs = obj.value("max_epochs", h.max_epochs);
    h.layers = obj.value("layers", h.layers);
    h.hidden = obj.value("hidden", h.hidden);
    h.grad_clip_norm = obj.value("grad_clip_norm", h.grad_clip_norm);
    h.seed = obj.value("seed", h.seed);
    h.adam_beta1 = obj.value("adam_beta1", h.adam_beta1);
    h.adam_beta2 = obj.value("adam_beta2", h.adam_beta2);
    h.adam_epsilon = obj.value("adam_epsilon", h.adam_epsilon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hyperparams: ") + e.what());
  }
  h.validate();
  return h;
}

std::string Hyperparams::to_json() const {
  nlohmann::ordered_json obj;
  obj["batch_size"] = batch_size;
  obj["learning_rate"] = learning_rate;
  obj["max_epochs"] = max_epochs;
  obj["layers"] = layers;
  obj["hidden"] = hidden;
  obj["grad_clip_norm"] = grad_clip_norm;
  obj["seed"] = seed;
  obj["adam_beta1"] = adam_beta1;
  obj["adam_beta2"] = adam_beta2;
  obj["adam_epsilon"] = adam_epsilon;
  return obj.dump();
}

Parameters Parameters::zeros(const ModelShape& s) {
  Parameters p;
  const int h = s.hidden, k = s.num_labels;
  for (int l = 0; l < s.layers; ++l) {
    const int in = l == 0 ? s.input_dim : 2 * h;
    for (int dir = 0; dir < 2; ++dir) {
      LstmDirection d;
      d.w_input = Matrix::Zero(4 * h, in);
      d.w_recurrent = Matrix::Zero(4 * h, h);
      d.bias = Matrix::Zero(4 * h, 1);
      p.lstm.push_back(std::move(d));
    }
  }
  p.proj_weight = Matrix::Zero(k, 2 * h);
  p.proj_bias = Matrix::Zero(k, 1);
  p.transitions = Matrix::Zero(k, k);
  p.start = Matrix::Zero(k, 1);
  p.stop = Matrix::Zero(k, 1);
  return p;
}

std::vector<Matrix*> Parameters::tensors() {
  std::vector<Matrix*> out;
  for (auto& d : lstm) {
    out.push_back(&d.w_input);
    out.push_back(&d.w_recurrent);
    out.push_back(&d.bias);
  }
  for (Matrix* m : {&proj_weight, &proj_bias, &transitions, &start, &stop}) out.push_back(m);
  return out;
}

std::vector<const Matrix*> Parameters::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& d : lstm) {
    out.push_back(&d.w_input);
    out.push_back(&d.w_recurrent);
    out.push_back(&d.bias);
  }
  for (const Matrix* m : {&proj_weight, &proj_bias, &transitions, &start, &stop}) out.push_back(m);
  return out;
}

std::vector<std::string> Parameters::tensor_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lstm.size(); ++i) {
    const std::string prefix =
        "lstm.l" + std::to_string(i / 2) + (i % 2 == 0 ? ".forward." : ".backward.");
    out.push_back(prefix + "w_input");
    out.push_back(prefix + "w_recurrent");
    out.push_back(prefix + "bias");
  }
  for (const char* n : {"proj.weight", "proj.bias", "crf.transitions", "crf.start", "crf.stop"}) out.emplace_back(n);
  return out;
}

void Parameters::set_zero() {
  for (Matrix* m : tensors()) m->setZero();
}

Parameters& Parameters::operator+=(const Parameters& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
  return *this;
}

Parameters& Parameters::operator*=(double scale) {
  for (Matrix* m : tensors()) *m *= scale;
  return *this;
}

double Parameters::squared_norm() const {
  double s = 0.0;
  for (const Matrix* m : tensors()) s += m->squaredNorm();
  return s;
}

bool Parameters::all_finite() const {
  for (const Matrix* m : tensors()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

bool Parameters::operator==(const Parameters& other) const {
  auto a = tensors();
  auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
    if (std::memcmp(a[i]->data(), b[i]->data(), sizeof(double) * static_cast<std::size_t>(a[i]->size())) != 0) {
      return false;
    }
  }
  return true;
}

TaggerModel TaggerModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.input_dim <= 0 || shape.hidden <= 0 || shape.layers <= 0 || shape.num_labels <= 0) {
    throw ConfigError("model shape must be positive in every dimension");
  }
  TaggerModel m;
  m.shape = shape;
  m.params = Parameters::zeros(shape);
  Rng rng(detail::mix64(seed ^ 0x7a99e5ULL));
  auto fill = [&](Matrix& t, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = rng.uniform(-bound, bound);
    }
  };
  for (std::size_t i = 0; i < m.params.lstm.size(); ++i) {
    auto& d = m.params.lstm[i];
    const int fan_in = static_cast<int>(d.w_input.cols()) + shape.hidden;
    fill(d.w_input, fan_in);
    fill(d.w_recurrent, fan_in);
    fill(d.bias, fan_in);
  }
  fill(m.params.proj_weight, 2 * shape.hidden);
  fill(m.params.proj_bias, 2 * shape.hidden);
  fill(m.params.transitions, shape.num_labels);
  fill(m.params.start, shape.num_labels);
  fill(m.params.stop, shape.num_labels);
  return m;
}

LabelScheme TaggerModel::scheme() const {
  if (shape.num_labels == 5) return LabelScheme::standard();
  if (shape.num_labels == 4) return LabelScheme::merged();
  throw DimensionError("no label scheme has " + std::to_string(shape.num_labels) + " labels");
}

void TaggerModel::check_shapes() const {
  Parameters expected = Parameters::zeros(shape);
  auto want = expected.tensors();
  auto have = params.tensors();
  auto names = expected.tensor_names();
  if (want.size() != have.size()) throw DimensionError("model has the wrong number of tensors");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i]->rows() != have[i]->rows() || want[i]->cols() != have[i]->cols()) {
      throw DimensionError("tensor " + names[i] + " has shape " + std::to_string(have[i]->rows()) + "x" +
                           std::to_string(have[i]->cols()) + ", expected " + std::to_string(want[i]->rows()) + "x" +
                           std::to_string(want[i]->cols()));
    }
  }
}

// ---- Transfer ---------------------------------------------------------------

LabelMap identity_map(const LabelScheme& scheme) {
  LabelMap m;
  for (SoapLabel l : scheme.labels()) m[l] = l;
  return m;
}

LabelMap merge_assessment_plan_map() {
  return {{SoapLabel::Subjective, SoapLabel::Subjective},
          {SoapLabel::Objective, SoapLabel::Objective},
          {SoapLabel::Assessment, SoapLabel::AssessmentAndPlan},
          {SoapLabel::Plan, SoapLabel::AssessmentAndPlan},
          {SoapLabel::Out, SoapLabel::Out}};
}

TaggerModel transfer_init(const TaggerModel& source, const LabelMap& map, const LabelScheme& target) {
  source.check_shapes();
  const LabelScheme src_scheme = source.scheme();
  const int kt = static_cast<int>(target.size());
  std::vector<std::vector<int>> sources(static_cast<std::size_t>(kt));
  for (const auto& [from, to] : map) {
    if (!src_scheme.contains(from)) {
      throw ConfigError("transfer map: source label " + std::string(display_name(from)) + " is not in the " +
                        std::string(src_scheme.name()) + " scheme");
    }
    if (!target.contains(to)) {
      throw ConfigError("transfer map: target label " + std::string(display_name(to)) + " is not in the " +
                        std::string(target.name()) + " scheme");
    }
    sources[static_cast<std::size_t>(target.index_of(to))].push_back(src_scheme.index_of(from));
  }
  for (int t = 0; t < kt; ++t) {
    if (sources[static_cast<std::size_t>(t)].empty()) {
      throw ConfigError("transfer map: target label " + std::string(display_name(target.at(t))) + " is unmapped");
    }
  }

  TaggerModel out;
  out.shape = source.shape;
  out.shape.num_labels = kt;
  out.params = Parameters::zeros(out.shape);
  out.params.lstm = source.params.lstm;
  const auto& sp = source.params;
  for (int t = 0; t < kt; ++t) {
    const auto& srcs = sources[static_cast<std::size_t>(t)];
    const double n = static_cast<double>(srcs.size());
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(sp.proj_weight.cols());
    double bias = 0.0, start = 0.0, stop = 0.0;
    for (int s : srcs) {
      row += sp.proj_weight.row(s);
      bias += sp.proj_bias(s, 0);
      start += sp.start(s, 0);
      stop += sp.stop(s, 0);
    }
    out.params.proj_weight.row(t) = row / n;
    out.params.proj_bias(t, 0) = bias / n;
    out.params.start(t, 0) = start / n;
    out.params.stop(t, 0) = stop / n;
    for (int u = 0; u < kt; ++u) {
      const auto& dsts = sources[static_cast<std::size_t>(u)];
      double acc = 0.0;
      for (int s : srcs) {
        for (int d : dsts) acc += sp.transitions(s, d);
      }
      out.params.transitions(t, u) = acc / (n * static_cast<double>(dsts.size()));
    }
  }
  return out;
}

// ---- Checkpoints ------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct CheckpointReader {
  std::string_view bytes;
  const std::string& origin;
  std::size_t pos = 0;

  void need(std::size_t n, const std::string& what) {
    if (bytes.size() - pos < n) {
      throw FormatError(origin + ": truncated " + what + " at offset " + std::to_string(pos));
    }
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace

std::string encode_model(const TaggerModel& model) {
  model.check_shapes();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, model.version);
  put_u32(out, static_cast<std::uint32_t>(model.shape.input_dim));
  put_u32(out, static_cast<std::uint32_t>(model.shape.num_labels));
  put_u32(out, static_cast<std::uint32_t>(model.shape.layers));
  put_u32(out, static_cast<std::uint32_t>(model.shape.hidden));
  const auto tensors = model.params.tensors();
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Matrix* t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t->rows()));
    put_u32(out, static_cast<std::uint32_t>(t->cols()));
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) put_f64(out, (*t)(r, c));
    }
  }
  return out;
}

TaggerModel decode_model(std::string_view bytes, const std::string& origin) {
  CheckpointReader r{bytes, origin};
  r.need(sizeof kCheckpointMagic, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError(origin + ": bad magic (expected SOAPTAG1)");
  }
  r.pos = sizeof kCheckpointMagic;
  TaggerModel m;
  m.version = r.u32("version");
  if (m.version != kCheckpointVersion) {
    throw FormatError(origin + ": unsupported checkpoint version " + std::to_string(m.version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t shape_offset = r.pos;
  m.shape.input_dim = static_cast<int>(r.u32("input_dim"));
  m.shape.num_labels = static_cast<int>(r.u32("num_labels"));
  m.shape.layers = static_cast<int>(r.u32("layers"));
  m.shape.hidden = static_cast<int>(r.u32("hidden"));
  if (m.shape.input_dim <= 0 || m.shape.num_labels <= 0 || m.shape.layers <= 0 || m.shape.hidden <= 0 ||
      m.shape.layers > 64 || m.shape.hidden > (1 << 16) || m.shape.input_dim > (1 << 24) || m.shape.num_labels > 64) {
    throw FormatError(origin + ": implausible model shape at offset " + std::to_string(shape_offset));
  }
  m.params = Parameters::zeros(m.shape);
  auto tensors = m.params.tensors();
  auto names = m.params.tensor_names();
  const std::size_t count_offset = r.pos;
  const std::uint32_t count = r.u32("tensor count");
  if (count != tensors.size()) {
    throw FormatError(origin + ": tensor count " + std::to_string(count) + " at offset " +
                      std::to_string(count_offset) + " does not match the header shape (expected " +
                      std::to_string(tensors.size()) + ")");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Matrix& t = *tensors[i];
    const std::size_t header_offset = r.pos;
    const std::uint32_t rows = r.u32(names[i] + " rows");
    const std::uint32_t cols = r.u32(names[i] + " cols");
    if (rows != static_cast<std::uint32_t>(t.rows()) || cols != static_cast<std::uint32_t>(t.cols())) {
      throw FormatError(origin + ": tensor " + names[i] + " declares " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " at offset " + std::to_string(header_offset) + ", expected " +
                        std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    }
    r.need(static_cast<std::size_t>(rows) * cols * 8, names[i] + " data");
    for (Eigen::Index rr = 0; rr < t.rows(); ++rr) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(rr, c) = r.f64(names[i]);
    }
  }
  if (r.pos != bytes.size()) {
    throw FormatError(origin + ": trailing bytes at offset " + std::to_string(r.pos));
  }
  return m;
}

void save_model(const TaggerModel& model, const std::string& path) { detail::write_file(path, encode_model(model)); }

TaggerModel load_model(const std::string& path) { return decode_model(detail::read_file(path), path); }

}  // namespace soapseg::tagger
