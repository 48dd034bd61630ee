#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relclass/encoder.hpp"
#include "relclass/tape.hpp"

namespace relclass {

inline constexpr const char* kUnk = "<unk>";

// Splits UTF-8 into code points; bytes that do not start a valid sequence
// are passed through as single-byte units rather than dropped.
std::vector<std::string> utf8_codepoints(const std::string& s);

std::string ascii_lower(const std::string& s);

// One token with its surface tags. chars() is the code point decomposition
// of the surface form.
struct Token {
  std::string surface;
  std::string pos;
  std::string wnh;

  std::vector<std::string> chars() const { return utf8_codepoints(surface); }

  bool operator==(const Token&) const = default;
};

// Embedding table with a reserved UNK entry at row 0. `lowercase` folds the
// key before lookup (used by the frozen pre-trained table, whose vectors
// were trained on lowercased text).
struct LookupTable {
  std::vector<std::string> words;  // row order; words[0] == kUnk
  std::unordered_map<std::string, int> index;
  MatParam table;
  bool lowercase = false;

  int dim() const { return table.value.cols(); }
  int size() const { return table.value.rows(); }
  // Row for key, or the UNK row when absent. Total function.
  int row_of(const std::string& key) const;
};

// Empty table holding only the UNK row, dim columns, zero entries.
LookupTable make_table(const std::string& name, int dim);

// Table with UNK prepended to `words` (duplicates of earlier entries and of
// UNK are dropped); entries zeroed. Single allocation.
LookupTable make_table(const std::string& name, int dim,
                       std::span<const std::string> words);

// Appends a row for `word` if new. Returns its row index either way.
int add_word(LookupTable& t, const std::string& word);

// Traced lookup. Rows of frozen tables enter the tape as constants, so the
// zero UNK row of the pre table makes unknown words contribute nothing.
Value lookup(Tape& tape, LookupTable& t, const std::string& key);

// Pre-trained embeddings as loaded from a word2vec-style text file.
struct PreEmbeddings {
  int dim = 0;
  std::vector<std::string> words;
  std::vector<Vec> vectors;
  int skipped_lines = 0;    // malformed lines in the source file
  int duplicate_words = 0;  // repeated words; first occurrence won
};

// Frozen lowercasing table from loaded vectors; UNK row stays all-zero.
// Throws DataError when emb.dim != expect_dim.
LookupTable build_pre_table(const PreEmbeddings& emb, int expect_dim);

// Last hidden state of one LSTM run left-to-right over the character
// embeddings, concatenated with the last state of an independent run
// right-to-left. Output dim = 2 * per-direction hidden size.
Value compose_char(Tape& tape, std::span<const std::string> chars,
                   LookupTable& char_table, LstmParams& fwd, LstmParams& bwd);

// Channel ablation switches. `chr` is the character Bi-LSTM channel.
struct ChannelFlags {
  bool pre = true;
  bool ran = true;
  bool chr = true;
  bool pos = true;
  bool wnh = true;

  bool any() const { return pre || ran || chr || pos || wnh; }
  bool operator==(const ChannelFlags&) const = default;
};

// All per-token feature machinery in one place.
struct FeatureParams {
  LookupTable pre;    // frozen
  LookupTable ran;
  LookupTable chars;
  LookupTable pos;
  LookupTable wnh;
  LstmParams char_fwd;
  LstmParams char_bwd;
  ChannelFlags flags;

  int token_dim() const;
};

// x = r_pre ⊕ r_ran ⊕ r_char ⊕ r_pos ⊕ r_wnh in exactly this order;
// disabled channels are omitted. Throws ConfigError when no channel is on.
Value embed_token(Tape& tape, FeatureParams& f, const Token& tok);

struct VocabConfig {
  int n_ran = 50;
  int n_char = 50;
  int n_pos = 50;
  int n_wnh = 50;
  bool char_lowercase = false;
};

struct BuiltVocabs {
  LookupTable ran, chars, pos, wnh;
};

// Vocabularies in first-occurrence order over the training tokens, each with
// the reserved UNK row. Matrices are allocated zeroed; initialization order
// is owned by the model so runs stay reproducible.
BuiltVocabs build_vocab(std::span<const Token* const> corpus,
                        const VocabConfig& cfg);

}  // namespace relclass
