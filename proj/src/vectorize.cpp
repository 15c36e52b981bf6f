#include "soapseg/vectorize.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "util.hpp"

namespace soapseg::vectorize {

namespace {

constexpr std::uint64_t kHashBasis = 0x5eed50a95e9ULL;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(origin_ + ": truncated " + what + " at offset " + std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

ParagraphVector hashed_vectorize(std::string_view text, int dim) {
  if (dim < 8 || !std::has_single_bit(static_cast<unsigned>(dim))) {
    throw ContractError("hashed_vectorize: dimension must be a power of two >= 8, got " + std::to_string(dim));
  }
  std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
  auto add = [&](std::string_view feature) {
    const std::uint64_t h = detail::mix64(detail::fnv1a64(feature, kHashBasis));
    const std::size_t bucket = static_cast<std::size_t>(h & static_cast<std::uint64_t>(dim - 1));
    acc[bucket] += ((h >> 40) & 1U) ? -1.0 : 1.0;
  };
  const auto tokens = detail::word_tokens(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  ParagraphVector out;
  out.values.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = norm > 0.0 ? static_cast<float>(acc[i] / norm) : 0.0f;
  return out;
}

ParagraphVector hashed_vectorize(const Paragraph& paragraph, int dim) { return hashed_vectorize(paragraph.text, dim); }

ParagraphVector pool_sentences(std::span<const ParagraphVector> sentence_vectors) {
  if (sentence_vectors.empty()) throw ContractError("pool_sentences: empty input");
  const std::size_t dim = sentence_vectors.front().dim();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : sentence_vectors) {
    if (v.dim() != dim) throw ContractError("pool_sentences: mixed dimensions");
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v.values[i];
  }
  ParagraphVector out;
  out.values.resize(dim);
  const double n = static_cast<double>(sentence_vectors.size());
  for (std::size_t i = 0; i < dim; ++i) out.values[i] = static_cast<float>(acc[i] / n);
  return out;
}

std::string embedding_key(std::string_view note_id, int paragraph_index) {
  return std::string(note_id) + "#" + std::to_string(paragraph_index);
}

EmbeddingTable::EmbeddingTable(int dim) : dim_(dim) {
  if (dim < 1) throw ValidationError("embedding dimension must be >= 1");
}

void EmbeddingTable::add(std::string key, ParagraphVector vector) {
  if (static_cast<int>(vector.dim()) != dim_) {
    throw ValidationError("embedding '" + key + "' has dimension " + std::to_string(vector.dim()) + ", expected " +
                          std::to_string(dim_));
  }
  if (!index_.emplace(key, keys_.size()).second) throw ValidationError("duplicate embedding key '" + key + "'");
  keys_.push_back(std::move(key));
  rows_.push_back(std::move(vector));
}

const ParagraphVector* EmbeddingTable::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

std::string encode_embeddings(const EmbeddingTable& table) {
  std::string out(kEmbeddingMagic, sizeof kEmbeddingMagic);
  put_u32(out, static_cast<std::uint32_t>(table.dim()));
  put_u64(out, table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& key = table.keys()[i];
    put_u32(out, static_cast<std::uint32_t>(key.size()));
    out += key;
    for (float f : table.row(i).values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

EmbeddingTable decode_embeddings(std::string_view bytes, const std::string& origin) {
  Reader r(bytes, origin);
  std::string_view magic = r.take(sizeof kEmbeddingMagic, "magic");
  if (std::memcmp(magic.data(), kEmbeddingMagic, sizeof kEmbeddingMagic) != 0) {
    throw FormatError(origin + ": bad magic (expected SOAPVEC1)");
  }
  const auto dim = static_cast<std::int32_t>(r.u32("dim"));
  if (dim < 1) throw FormatError(origin + ": dim must be >= 1, got " + std::to_string(dim));
  const std::uint64_t count = r.u64("count");
  EmbeddingTable table(dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t record_start = r.offset();
    if (r.at_end()) {
      throw FormatError(origin + ": truncated record " + std::to_string(k) + " of " + std::to_string(count) +
                        " at offset " + std::to_string(record_start));
    }
    const std::uint32_t key_len = r.u32("key length");
    std::string key(r.take(key_len, "key"));
    ParagraphVector v;
    v.values.resize(static_cast<std::size_t>(dim));
    for (auto& f : v.values) f = std::bit_cast<float>(r.u32("vector"));
    table.add(std::move(key), std::move(v));
  }
  if (!r.at_end()) {
    throw FormatError(origin + ": trailing bytes after " + std::to_string(count) + " records at offset " +
                      std::to_string(r.offset()));
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  detail::write_file(path, encode_embeddings(table));
}

EmbeddingTable load_embeddings(const std::string& path) { return decode_embeddings(detail::read_file(path), path); }

HashedProvider::HashedProvider(int dim) : dim_(dim) {
  if (dim < 8 || !std::has_single_bit(static_cast<unsigned>(dim))) {
    throw ConfigError("hashed provider: dimension must be a power of two >= 8, got " + std::to_string(dim));
  }
}

ParagraphVector HashedProvider::vector_for(const std::string&, const Paragraph& paragraph) const {
  return hashed_vectorize(paragraph, dim_);
}

std::unique_ptr<FileProvider> FileProvider::open(const std::string& path) {
  return std::make_unique<FileProvider>(load_embeddings(path));
}

ParagraphVector FileProvider::vector_for(const std::string& note_id, const Paragraph& paragraph) const {
  const std::string key = embedding_key(note_id, paragraph.index);
  const ParagraphVector* v = table_.find(key);
  if (!v) throw LookupError("no embedding for key '" + key + "'");
  return *v;
}

NoteMatrix vectorize_note(const std::string& note_id, const std::vector<Paragraph>& paragraphs,
                          const Provider& provider) {
  NoteMatrix m;
  m.note_id = note_id;
  m.rows.reserve(paragraphs.size());
  for (const auto& p : paragraphs) m.rows.push_back(provider.vector_for(note_id, p));
  return m;
}

NoteMatrix vectorize_note(const LabeledNote& note, const Provider& provider) {
  return vectorize_note(note.note.id, note.paragraphs, provider);
}

std::vector<NoteMatrix> vectorize_corpus(const std::vector<LabeledNote>& notes, const Provider& provider) {
  std::vector<NoteMatrix> out;
  out.reserve(notes.size());
  for (const auto& n : notes) out.push_back(vectorize_note(n, provider));
  return out;
}

EmbeddingTable to_table(const std::vector<NoteMatrix>& matrices) {
  int dim = 0;
  for (const auto& m : matrices) {
    if (!m.rows.empty()) {
      dim = static_cast<int>(m.dim());
      break;
    }
  }
  EmbeddingTable table(dim == 0 ? 1 : dim);
  for (const auto& m : matrices) {
    for (std::size_t i = 0; i < m.rows.size(); ++i) table.add(embedding_key(m.note_id, static_cast<int>(i)), m.rows[i]);
  }
  return table;
}

}  // namespace soapseg::vectorize
