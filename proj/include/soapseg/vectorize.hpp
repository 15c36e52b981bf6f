#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "soapseg/types.hpp"

namespace soapseg::vectorize {

inline constexpr int kDefaultDim = 256;

struct ParagraphVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const ParagraphVector&) const = default;
};

struct NoteMatrix {
  std::string note_id;
  std::vector<ParagraphVector> rows;

  std::size_t dim() const { return rows.empty() ? 0 : rows.front().dim(); }
  bool operator==(const NoteMatrix&) const = default;
};

// Signed feature hashing of lowercased word unigrams and bigrams into `dim`
// buckets, then L2 normalization. `dim` must be a power of two >= 8.
ParagraphVector hashed_vectorize(std::string_view text, int dim);
ParagraphVector hashed_vectorize(const Paragraph& paragraph, int dim);

// Per-dimension arithmetic mean. Throws ContractError on an empty list or a
// dimension mismatch.
ParagraphVector pool_sentences(std::span<const ParagraphVector> sentence_vectors);

// ---- Embedding file ("SOAPVEC1") ---------------------------------------------
//
//   magic   8 bytes  "SOAPVEC1"
//   dim     int32 LE
//   count   int64 LE
//   count x { key_len uint32 LE, key bytes (UTF-8), dim x float32 LE }

inline constexpr char kEmbeddingMagic[8] = {'S', 'O', 'A', 'P', 'V', 'E', 'C', '1'};

std::string embedding_key(std::string_view note_id, int paragraph_index);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  const ParagraphVector& row(std::size_t i) const { return rows_[i]; }

  // Throws ValidationError on duplicate keys or a dimension mismatch.
  void add(std::string key, ParagraphVector vector);
  const ParagraphVector* find(const std::string& key) const;

  bool operator==(const EmbeddingTable& other) const { return dim_ == other.dim_ && keys_ == other.keys_ && rows_ == other.rows_; }

 private:
  int dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<ParagraphVector> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(std::string_view bytes, const std::string& origin = "<memory>");
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

// ---- Providers ---------------------------------------------------------------

class Provider {
 public:
  virtual ~Provider() = default;
  virtual int dim() const = 0;
  virtual ParagraphVector vector_for(const std::string& note_id, const Paragraph& paragraph) const = 0;
  virtual std::string name() const = 0;
};

class HashedProvider final : public Provider {
 public:
  explicit HashedProvider(int dim = kDefaultDim);
  int dim() const override { return dim_; }
  ParagraphVector vector_for(const std::string& note_id, const Paragraph& paragraph) const override;
  std::string name() const override { return "hashed"; }

 private:
  int dim_;
};

// Looks vectors up by "note_id#paragraph_index"; a missing key is a LookupError.
class FileProvider final : public Provider {
 public:
  explicit FileProvider(EmbeddingTable table) : table_(std::move(table)) {}
  static std::unique_ptr<FileProvider> open(const std::string& path);

  int dim() const override { return table_.dim(); }
  ParagraphVector vector_for(const std::string& note_id, const Paragraph& paragraph) const override;
  std::string name() const override { return "file"; }
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
};

NoteMatrix vectorize_note(const LabeledNote& note, const Provider& provider);
NoteMatrix vectorize_note(const std::string& note_id, const std::vector<Paragraph>& paragraphs,
                          const Provider& provider);
std::vector<NoteMatrix> vectorize_corpus(const std::vector<LabeledNote>& notes, const Provider& provider);

// Flattens matrices into an embedding table keyed "note_id#i".
EmbeddingTable to_table(const std::vector<NoteMatrix>& matrices);

}  // namespace soapseg::vectorize
