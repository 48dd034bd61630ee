#include "relclass/features.hpp"

#include "relclass/errors.hpp"

namespace relclass {

std::vector<std::string> utf8_codepoints(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((b & 0x80u) == 0x00u) len = 1;
    else if ((b & 0xE0u) == 0xC0u) len = 2;
    else if ((b & 0xF0u) == 0xE0u) len = 3;
    else if ((b & 0xF8u) == 0xF0u) len = 4;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0u) != 0x80u) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

int LookupTable::row_of(const std::string& key) const {
  const std::string k = lowercase ? ascii_lower(key) : key;
  auto it = index.find(k);
  return it == index.end() ? 0 : it->second;
}

LookupTable make_table(const std::string& name, int dim) {
  if (dim <= 0) throw DimensionError("table '" + name + "': dim " + std::to_string(dim));
  LookupTable t;
  t.words = {kUnk};
  t.index = {{kUnk, 0}};
  t.table = {name, Mat(1, dim)};
  return t;
}

LookupTable make_table(const std::string& name, int dim,
                       std::span<const std::string> words) {
  LookupTable t = make_table(name, dim);
  for (const std::string& w : words) {
    if (t.index.emplace(w, static_cast<int>(t.words.size())).second) {
      t.words.push_back(w);
    }
  }
  t.table.value = Mat(static_cast<int>(t.words.size()), dim);
  return t;
}

// Grows the matrix by one row; fine for tests, use make_table for corpora.
int add_word(LookupTable& t, const std::string& word) {
  auto it = t.index.find(word);
  if (it != t.index.end()) return it->second;
  const int row = static_cast<int>(t.words.size());
  t.words.push_back(word);
  t.index.emplace(word, row);
  Mat grown(row + 1, t.dim());
  for (int r = 0; r < t.table.value.rows(); ++r) {
    for (int c = 0; c < t.dim(); ++c) grown(r, c) = t.table.value(r, c);
  }
  t.table.value = std::move(grown);
  return row;
}

Value lookup(Tape& tape, LookupTable& t, const std::string& key) {
  return tape.lookup(t.table, t.row_of(key));
}

LookupTable build_pre_table(const PreEmbeddings& emb, int expect_dim) {
  if (emb.dim != expect_dim) {
    throw DataError("pre-trained embedding dim " + std::to_string(emb.dim) +
                    " does not match configured dim " +
                    std::to_string(expect_dim));
  }
  if (emb.words.size() != emb.vectors.size()) {
    throw DataError("pre-trained embeddings: " + std::to_string(emb.words.size()) +
                    " words vs " + std::to_string(emb.vectors.size()) +
                    " vectors");
  }
  LookupTable t;
  t.lowercase = true;
  t.words = {kUnk};
  t.index = {{kUnk, 0}};
  std::vector<const Vec*> rows;
  for (std::size_t i = 0; i < emb.words.size(); ++i) {
    // A literal "<unk>" in the file would shadow the reserved zero row.
    if (t.index.emplace(emb.words[i], static_cast<int>(t.words.size())).second) {
      t.words.push_back(emb.words[i]);
      rows.push_back(&emb.vectors[i]);
    }
  }
  Mat m(static_cast<int>(t.words.size()), emb.dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < emb.dim; ++c) {
      m(static_cast<int>(r) + 1, c) = (*rows[r])[c];
    }
  }
  t.table = {"pre", std::move(m), /*frozen=*/true};
  return t;
}

Value compose_char(Tape& tape, std::span<const std::string> chars,
                   LookupTable& char_table, LstmParams& fwd, LstmParams& bwd) {
  if (chars.empty()) throw DataError("compose_char: empty character sequence");
  std::vector<Value> xs;
  xs.reserve(chars.size());
  for (const std::string& c : chars) xs.push_back(lookup(tape, char_table, c));

  Value h = tape.input(Vec(fwd.hidden()));
  Value c = tape.input(Vec(fwd.hidden()));
  for (std::size_t t = 0; t < xs.size(); ++t) {
    LstmStepValues s = lstm_step(tape, fwd, h, c, xs[t]);
    h = s.h;
    c = s.c;
  }
  Value l2r = h;
  h = tape.input(Vec(bwd.hidden()));
  c = tape.input(Vec(bwd.hidden()));
  for (std::size_t t = xs.size(); t-- > 0;) {
    LstmStepValues s = lstm_step(tape, bwd, h, c, xs[t]);
    h = s.h;
    c = s.c;
  }
  return tape.concat(l2r, h);
}

int FeatureParams::token_dim() const {
  int d = 0;
  if (flags.pre) d += pre.dim();
  if (flags.ran) d += ran.dim();
  if (flags.chr) d += 2 * char_fwd.hidden();
  if (flags.pos) d += pos.dim();
  if (flags.wnh) d += wnh.dim();
  return d;
}

Value embed_token(Tape& tape, FeatureParams& f, const Token& tok) {
  if (!f.flags.any()) throw ConfigError("embed_token: every channel disabled");
  std::vector<Value> parts;
  parts.reserve(5);
  if (f.flags.pre) parts.push_back(lookup(tape, f.pre, tok.surface));
  if (f.flags.ran) parts.push_back(lookup(tape, f.ran, tok.surface));
  if (f.flags.chr) {
    const auto cs = tok.chars();
    parts.push_back(compose_char(tape, cs, f.chars, f.char_fwd, f.char_bwd));
  }
  if (f.flags.pos) parts.push_back(lookup(tape, f.pos, tok.pos));
  if (f.flags.wnh) parts.push_back(lookup(tape, f.wnh, tok.wnh));
  if (parts.size() == 1) return parts[0];
  return tape.concat(parts);
}

BuiltVocabs build_vocab(std::span<const Token* const> corpus,
                        const VocabConfig& cfg) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::vector<std::string> ran, chars, pos, wnh;
  for (const Token* tok : corpus) {
    ran.push_back(tok->surface);
    for (const std::string& c : tok->chars()) {
      chars.push_back(cfg.char_lowercase ? ascii_lower(c) : c);
    }
    pos.push_back(tok->pos);
    wnh.push_back(tok->wnh);
  }
  BuiltVocabs v;
  v.ran = make_table("ran", cfg.n_ran, ran);
  v.chars = make_table("char", cfg.n_char, chars);
  v.chars.lowercase = cfg.char_lowercase;
  v.pos = make_table("pos", cfg.n_pos, pos);
  v.wnh = make_table("wnh", cfg.n_wnh, wnh);
  return v;
}

}  // namespace relclass
