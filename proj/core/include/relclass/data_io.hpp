#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "relclass/features.hpp"
#include "relclass/relation_head.hpp"

namespace relclass {

// Canonical internal instance. Every task format converts into this.
struct RelationInstance {
  std::string id;
  std::vector<Token> tokens;
  EntitySpans spans;  // positional: former precedes latter in the text
  std::string label;
  int window = 1;  // sentences spanned

  bool operator==(const RelationInstance&) const = default;
};

// Fixed label order per task; the row order of W2 and of reports.
struct LabelSchema {
  std::string task;
  std::vector<std::string> labels;

  static LabelSchema semeval();  // 9 families x 2 directions + Other
  static LabelSchema bb3();      // Lives_In, None
  static LabelSchema for_task(const std::string& task);

  // DataError on unknown label.
  int index_of(const std::string& label) const;
  bool contains(const std::string& label) const;
};

// Tokenizer rule, frozen: split on ASCII whitespace, then peel single
// non-alphanumeric ASCII code points off both chunk edges as their own
// tokens. Interior punctuation stays attached; non-ASCII bytes count as
// word characters.
struct TokenSpan {
  std::string text;
  int begin = 0;  // byte offsets into the source string
  int end = 0;
};

std::vector<TokenSpan> tokenize(const std::string& text);

// Official SemEval distribution layout: a numbered line with the quoted
// sentence carrying inline <e1>/<e2> tags, the relation line, an optional
// Comment line, then a blank separator.
std::vector<RelationInstance> parse_semeval(std::istream& in);
std::vector<RelationInstance> parse_semeval_file(const std::string& path);

// Internal JSONL carrier (one record per line); see docs/formats.md.
std::vector<RelationInstance> parse_corpus_jsonl(std::istream& in);
std::vector<RelationInstance> parse_corpus_jsonl_file(const std::string& path);
void write_corpus_jsonl(std::ostream& out,
                        const std::vector<RelationInstance>& instances);
void write_corpus_jsonl_file(const std::string& path,
                             const std::vector<RelationInstance>& instances);

// One document of the BB3-style JSONL schema: sentences of annotated tokens,
// typed entity mentions, gold Lives_In links by mention id.
struct Bb3Mention {
  std::string id;
  std::string type;  // "bacteria" | "habitat"
  int sentence = 0;
  int start = 0;  // token indices within the sentence, inclusive
  int end = 0;
};

struct Bb3Document {
  std::string id;
  std::vector<std::vector<Token>> sentences;
  std::vector<Bb3Mention> mentions;
  std::vector<std::pair<std::string, std::string>> links;  // mention id pairs
};

std::vector<Bb3Document> parse_bb3_jsonl(std::istream& in);
std::vector<Bb3Document> parse_bb3_jsonl_file(const std::string& path);

struct Bb3Stats {
  int positives = 0;
  int negatives = 0;
  int skipped_overlap = 0;  // overlapping/nested mention pairs, not emitted

  int total() const { return positives + negatives; }
  double positive_rate() const {
    return total() == 0 ? 0.0 : static_cast<double>(positives) / total();
  }
};

// Every (bacteria, habitat) mention pair within `window` consecutive
// sentences becomes one instance over the covered sentences' tokens.
// Label Lives_In when a gold link names the pair (either order), else None.
std::vector<RelationInstance> generate_bb3_pairs(
    const std::vector<Bb3Document>& docs, int window, Bb3Stats* stats = nullptr);

// word2vec-style text: optional "count dim" header, then one
// "word v1 ... vd" line per word. Malformed lines and duplicate words are
// skipped with counters (first occurrence wins).
PreEmbeddings read_embeddings_text(std::istream& in);
PreEmbeddings read_embeddings_text_file(const std::string& path);

// Frozen pre-trained lookup table; DataError when the file dim differs from
// expected_dim.
LookupTable load_embeddings(const std::string& path, int expected_dim);

// Deterministic dev split: shuffles a copy of `all` with the given seed and
// takes the first `dev_size` for dev, the rest for train.
std::pair<std::vector<RelationInstance>, std::vector<RelationInstance>>
split_dev(const std::vector<RelationInstance>& all, int dev_size,
          std::uint64_t seed);

}  // namespace relclass
