#include "relclass/data_io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "relclass/errors.hpp"
#include "relclass/rng.hpp"

namespace relclass {

using nlohmann::json;

namespace {

constexpr const char* kFamilies[] = {
    "Cause-Effect",     "Component-Whole",  "Content-Container",
    "Entity-Destination", "Entity-Origin",  "Instrument-Agency",
    "Member-Collection", "Message-Topic",   "Product-Producer",
};

bool ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Peelable edge character: ASCII, not alphanumeric. Non-ASCII bytes are
// word characters by the frozen rule.
bool peelable(char c) {
  return static_cast<unsigned char>(c) < 0x80 && !ascii_alnum(c) &&
         !ascii_space(c);
}

[[noreturn]] void fail_line(int lineno, const std::string& msg) {
  throw DataError("line " + std::to_string(lineno) + ": " + msg);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

LabelSchema LabelSchema::semeval() {
  LabelSchema s;
  s.task = "semeval";
  for (const char* f : kFamilies) {
    s.labels.push_back(std::string(f) + "(e1,e2)");
    s.labels.push_back(std::string(f) + "(e2,e1)");
  }
  s.labels.push_back("Other");
  return s;
}

LabelSchema LabelSchema::bb3() {
  return LabelSchema{"bb3", {"Lives_In", "None"}};
}

LabelSchema LabelSchema::for_task(const std::string& task) {
  if (task == "semeval") return semeval();
  if (task == "bb3") return bb3();
  throw ConfigError("unknown task '" + task + "'");
}

int LabelSchema::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<int>(i);
  }
  throw DataError("unknown " + task + " label '" + label + "'");
}

bool LabelSchema::contains(const std::string& label) const {
  for (const std::string& l : labels) {
    if (l == label) return true;
  }
  return false;
}

std::vector<TokenSpan> tokenize(const std::string& text) {
  std::vector<TokenSpan> out;
  const int n = static_cast<int>(text.size());
  int i = 0;
  while (i < n) {
    while (i < n && ascii_space(text[i])) ++i;
    if (i >= n) break;
    int j = i;
    while (j < n && !ascii_space(text[j])) ++j;
    int b = i, e = j;
    while (b < e && peelable(text[b])) {
      out.push_back({text.substr(static_cast<std::size_t>(b), 1), b, b + 1});
      ++b;
    }
    int s = e;
    while (s > b && peelable(text[s - 1])) --s;
    if (s > b) {
      out.push_back({text.substr(static_cast<std::size_t>(b),
                                 static_cast<std::size_t>(s - b)),
                     b, s});
    }
    for (int k = s; k < e; ++k) {
      out.push_back({text.substr(static_cast<std::size_t>(k), 1), k, k + 1});
    }
    i = j;
  }
  return out;
}

namespace {

struct TagSpans {
  std::string clean;
  int e1b = -1, e1e = -1, e2b = -1, e2e = -1;
};

TagSpans strip_entity_tags(const std::string& s, int lineno) {
  TagSpans t;
  std::size_t i = 0;
  auto at = [&](const char* tag) {
    return s.compare(i, std::char_traits<char>::length(tag), tag) == 0;
  };
  while (i < s.size()) {
    if (at("<e1>")) {
      if (t.e1b != -1) fail_line(lineno, "duplicate <e1> tag");
      t.e1b = static_cast<int>(t.clean.size());
      i += 4;
    } else if (at("</e1>")) {
      if (t.e1b == -1 || t.e1e != -1) fail_line(lineno, "misplaced </e1> tag");
      t.e1e = static_cast<int>(t.clean.size());
      i += 5;
    } else if (at("<e2>")) {
      if (t.e2b != -1) fail_line(lineno, "duplicate <e2> tag");
      t.e2b = static_cast<int>(t.clean.size());
      i += 4;
    } else if (at("</e2>")) {
      if (t.e2b == -1 || t.e2e != -1) fail_line(lineno, "misplaced </e2> tag");
      t.e2e = static_cast<int>(t.clean.size());
      i += 5;
    } else {
      t.clean += s[i++];
    }
  }
  if (t.e1b == -1 || t.e1e == -1) fail_line(lineno, "missing <e1>...</e1> tags");
  if (t.e2b == -1 || t.e2e == -1) fail_line(lineno, "missing <e2>...</e2> tags");
  if (t.e1e <= t.e1b) fail_line(lineno, "empty <e1> entity");
  if (t.e2e <= t.e2b) fail_line(lineno, "empty <e2> entity");
  if (t.e1b < t.e2e && t.e2b < t.e1e) fail_line(lineno, "overlapping entity tags");
  return t;
}

// Inclusive token range covering byte range [b, e).
std::pair<int, int> token_range(const std::vector<TokenSpan>& toks, int b,
                                int e, int lineno, const char* which) {
  int first = -1, last = -1;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].begin < e && toks[i].end > b) {
      if (first == -1) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first == -1) {
    fail_line(lineno, std::string(which) + " entity covers no token");
  }
  return {first, last};
}

}  // namespace

std::vector<RelationInstance> parse_semeval(std::istream& in) {
  const LabelSchema schema = LabelSchema::semeval();
  std::vector<RelationInstance> out;
  std::unordered_set<std::string> seen_ids;

  std::string line;
  int lineno = 0;
  std::optional<std::pair<std::string, int>> pending;
  auto next_line = [&]() -> bool {
    if (pending) {
      line = pending->first;
      lineno = pending->second;
      pending.reset();
      return true;
    }
    if (!std::getline(in, line)) return false;
    ++lineno;
    strip_cr(line);
    return true;
  };

  while (next_line()) {
    if (line.empty()) continue;
    const int sent_lineno = lineno;

    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      fail_line(sent_lineno, "expected '<id>\\t\"<sentence>\"'");
    }
    const std::string id = line.substr(0, tab);
    for (char c : id) {
      if (c < '0' || c > '9') fail_line(sent_lineno, "non-numeric record id '" + id + "'");
    }
    if (!seen_ids.insert(id).second) {
      fail_line(sent_lineno, "duplicate record id '" + id + "'");
    }
    std::string quoted = line.substr(tab + 1);
    if (quoted.size() < 2 || quoted.front() != '"' || quoted.back() != '"') {
      fail_line(sent_lineno, "sentence is not double-quoted");
    }
    const std::string sentence = quoted.substr(1, quoted.size() - 2);
    const TagSpans tags = strip_entity_tags(sentence, sent_lineno);

    if (!next_line() || line.empty()) {
      fail_line(lineno + 1, "record '" + id + "': missing relation line");
    }
    const std::string label = line;
    if (!schema.contains(label)) {
      fail_line(lineno, "unknown relation label '" + label + "'");
    }

    if (next_line()) {
      if (line.compare(0, 7, "Comment") != 0 && !line.empty()) {
        pending = {line, lineno};
      }
    }

    const std::vector<TokenSpan> toks = tokenize(tags.clean);
    const auto [e1s, e1last] =
        token_range(toks, tags.e1b, tags.e1e, sent_lineno, "e1");
    const auto [e2s, e2last] =
        token_range(toks, tags.e2b, tags.e2e, sent_lineno, "e2");

    // Parts are positional: former is whichever entity comes first in text.
    EntitySpans spans;
    if (tags.e1b < tags.e2b) {
      spans = {e1s, e1last, e2s, e2last};
    } else {
      spans = {e2s, e2last, e1s, e1last};
    }
    try {
      validate(spans, static_cast<int>(toks.size()));
    } catch (const DataError& e) {
      fail_line(sent_lineno, std::string("record '") + id + "': " + e.what());
    }

    RelationInstance inst;
    inst.id = id;
    inst.tokens.reserve(toks.size());
    for (const TokenSpan& t : toks) inst.tokens.push_back({t.text, "_", "_"});
    inst.spans = spans;
    inst.label = label;
    inst.window = 1;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<RelationInstance> parse_semeval_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return parse_semeval(in);
}

namespace {

void check_json_keys(const json& j, std::initializer_list<const char*> allowed,
                     int lineno, const std::string& where) {
  if (!j.is_object()) fail_line(lineno, where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) fail_line(lineno, where + ": unknown key '" + it.key() + "'");
  }
}

std::pair<int, int> read_span(const json& j, const char* key, int lineno) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2 ||
      !j.at(key)[0].is_number_integer() || !j.at(key)[1].is_number_integer()) {
    fail_line(lineno, std::string("'") + key + "' must be [start, end]");
  }
  return {j.at(key)[0].get<int>(), j.at(key)[1].get<int>()};
}

Token read_token(const json& j, int lineno, const std::string& where) {
  check_json_keys(j, {"surface", "pos", "wnh"}, lineno, where);
  Token t;
  if (!j.contains("surface") || !j.at("surface").is_string() ||
      j.at("surface").get<std::string>().empty()) {
    fail_line(lineno, where + ": 'surface' must be a non-empty string");
  }
  t.surface = j.at("surface").get<std::string>();
  t.pos = j.value("pos", "_");
  t.wnh = j.value("wnh", "_");
  if (t.pos.empty() || t.wnh.empty()) {
    fail_line(lineno, where + ": empty 'pos'/'wnh' tag");
  }
  return t;
}

}  // namespace

std::vector<RelationInstance> parse_corpus_jsonl(std::istream& in) {
  std::vector<RelationInstance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(lineno, e.what());
    }
    check_json_keys(j, {"id", "tokens", "former", "latter", "label", "window"},
                    lineno, "record");
    RelationInstance inst;
    if (!j.contains("id") || !j.at("id").is_string()) {
      fail_line(lineno, "'id' must be a string");
    }
    inst.id = j.at("id").get<std::string>();
    const std::string where = "record '" + inst.id + "'";
    if (!j.contains("tokens") || !j.at("tokens").is_array() ||
        j.at("tokens").empty()) {
      fail_line(lineno, where + ": 'tokens' must be a non-empty array");
    }
    for (const json& t : j.at("tokens")) {
      inst.tokens.push_back(read_token(t, lineno, where));
    }
    const auto [fs, fe] = read_span(j, "former", lineno);
    const auto [ls, le] = read_span(j, "latter", lineno);
    inst.spans = {fs, fe, ls, le};
    try {
      validate(inst.spans, static_cast<int>(inst.tokens.size()));
    } catch (const DataError& e) {
      fail_line(lineno, where + ": " + e.what());
    }
    if (!j.contains("label") || !j.at("label").is_string() ||
        j.at("label").get<std::string>().empty()) {
      fail_line(lineno, where + ": 'label' must be a non-empty string");
    }
    inst.label = j.at("label").get<std::string>();
    inst.window = j.value("window", 1);
    if (inst.window < 1) fail_line(lineno, where + ": 'window' must be >= 1");
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<RelationInstance> parse_corpus_jsonl_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return parse_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out,
                        const std::vector<RelationInstance>& instances) {
  for (const RelationInstance& inst : instances) {
    json toks = json::array();
    for (const Token& t : inst.tokens) {
      toks.push_back({{"surface", t.surface}, {"pos", t.pos}, {"wnh", t.wnh}});
    }
    const json j{
        {"id", inst.id},
        {"tokens", std::move(toks)},
        {"former", {inst.spans.former_start, inst.spans.former_end}},
        {"latter", {inst.spans.latter_start, inst.spans.latter_end}},
        {"label", inst.label},
        {"window", inst.window},
    };
    out << j.dump() << "\n";
  }
}

void write_corpus_jsonl_file(const std::string& path,
                             const std::vector<RelationInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  write_corpus_jsonl(out, instances);
}

std::vector<Bb3Document> parse_bb3_jsonl(std::istream& in) {
  std::vector<Bb3Document> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(lineno, e.what());
    }
    check_json_keys(j, {"id", "sentences", "entities", "links"}, lineno,
                    "document");
    Bb3Document doc;
    if (!j.contains("id") || !j.at("id").is_string()) {
      fail_line(lineno, "'id' must be a string");
    }
    doc.id = j.at("id").get<std::string>();
    const std::string where = "document '" + doc.id + "'";
    if (!j.contains("sentences") || !j.at("sentences").is_array() ||
        j.at("sentences").empty()) {
      fail_line(lineno, where + ": 'sentences' must be a non-empty array");
    }
    for (const json& s : j.at("sentences")) {
      if (!s.is_array() || s.empty()) {
        fail_line(lineno, where + ": each sentence must be a non-empty array");
      }
      std::vector<Token> sent;
      for (const json& t : s) sent.push_back(read_token(t, lineno, where));
      doc.sentences.push_back(std::move(sent));
    }
    std::unordered_set<std::string> mention_ids;
    if (j.contains("entities")) {
      for (const json& m : j.at("entities")) {
        check_json_keys(m, {"id", "type", "sentence", "start", "end"}, lineno,
                        where + " entity");
        Bb3Mention men;
        men.id = m.value("id", "");
        men.type = m.value("type", "");
        men.sentence = m.value("sentence", -1);
        men.start = m.value("start", -1);
        men.end = m.value("end", -1);
        if (men.id.empty()) fail_line(lineno, where + ": entity without id");
        if (men.type != "bacteria" && men.type != "habitat") {
          fail_line(lineno, where + ": entity '" + men.id +
                                "' has unknown type '" + men.type + "'");
        }
        if (men.sentence < 0 ||
            men.sentence >= static_cast<int>(doc.sentences.size())) {
          fail_line(lineno, where + ": entity '" + men.id +
                                "' sentence index out of range");
        }
        const int n =
            static_cast<int>(doc.sentences[static_cast<std::size_t>(men.sentence)].size());
        if (men.start < 0 || men.start > men.end || men.end >= n) {
          fail_line(lineno, where + ": entity '" + men.id +
                                "' token span out of range");
        }
        if (!mention_ids.insert(men.id).second) {
          fail_line(lineno, where + ": duplicate entity id '" + men.id + "'");
        }
        doc.mentions.push_back(std::move(men));
      }
    }
    if (j.contains("links")) {
      for (const json& l : j.at("links")) {
        if (!l.is_array() || l.size() != 2 || !l[0].is_string() ||
            !l[1].is_string()) {
          fail_line(lineno, where + ": each link must be [id, id]");
        }
        const std::string a = l[0].get<std::string>();
        const std::string b = l[1].get<std::string>();
        if (!mention_ids.count(a)) {
          fail_line(lineno, where + ": dangling link id '" + a + "'");
        }
        if (!mention_ids.count(b)) {
          fail_line(lineno, where + ": dangling link id '" + b + "'");
        }
        doc.links.emplace_back(a, b);
      }
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<Bb3Document> parse_bb3_jsonl_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return parse_bb3_jsonl(in);
}

std::vector<RelationInstance> generate_bb3_pairs(
    const std::vector<Bb3Document>& docs, int window, Bb3Stats* stats) {
  if (window < 1) throw ConfigError("window must be >= 1");
  Bb3Stats local;
  Bb3Stats& st = stats ? *stats : local;
  std::vector<RelationInstance> out;

  for (const Bb3Document& doc : docs) {
    std::set<std::pair<std::string, std::string>> linked;
    for (const auto& [a, b] : doc.links) {
      linked.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
    }
    std::vector<int> offset(doc.sentences.size() + 1, 0);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      offset[s + 1] = offset[s] + static_cast<int>(doc.sentences[s].size());
    }

    for (const Bb3Mention& bac : doc.mentions) {
      if (bac.type != "bacteria") continue;
      for (const Bb3Mention& hab : doc.mentions) {
        if (hab.type != "habitat") continue;
        const int lo = std::min(bac.sentence, hab.sentence);
        const int hi = std::max(bac.sentence, hab.sentence);
        if (hi - lo + 1 > window) continue;

        // Mention spans projected onto the covered-sentence concatenation.
        const int base = offset[static_cast<std::size_t>(lo)];
        const int bs = offset[static_cast<std::size_t>(bac.sentence)] - base + bac.start;
        const int be = offset[static_cast<std::size_t>(bac.sentence)] - base + bac.end;
        const int hs = offset[static_cast<std::size_t>(hab.sentence)] - base + hab.start;
        const int he = offset[static_cast<std::size_t>(hab.sentence)] - base + hab.end;

        EntitySpans spans;
        if (be < hs) {
          spans = {bs, be, hs, he};
        } else if (he < bs) {
          spans = {hs, he, bs, be};
        } else {
          ++st.skipped_overlap;  // overlapping or nested mentions
          continue;
        }

        RelationInstance inst;
        inst.id = doc.id + ":" + bac.id + ":" + hab.id;
        for (int s = lo; s <= hi; ++s) {
          const auto& sent = doc.sentences[static_cast<std::size_t>(s)];
          inst.tokens.insert(inst.tokens.end(), sent.begin(), sent.end());
        }
        inst.spans = spans;
        const auto key = bac.id < hab.id ? std::make_pair(bac.id, hab.id)
                                         : std::make_pair(hab.id, bac.id);
        inst.label = linked.count(key) ? "Lives_In" : "None";
        inst.window = hi - lo + 1;
        if (inst.label == "Lives_In") {
          ++st.positives;
        } else {
          ++st.negatives;
        }
        out.push_back(std::move(inst));
      }
    }
  }
  return out;
}

PreEmbeddings read_embeddings_text(std::istream& in) {
  PreEmbeddings emb;
  std::unordered_set<std::string> seen;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    {
      std::istringstream ss(line);
      std::string f;
      while (ss >> f) fields.push_back(std::move(f));
    }
    if (first) {
      first = false;
      // Optional "count dim" header.
      if (fields.size() == 2) {
        long count = 0, dim = 0;
        const auto r1 = std::from_chars(fields[0].data(),
                                        fields[0].data() + fields[0].size(), count);
        const auto r2 = std::from_chars(fields[1].data(),
                                        fields[1].data() + fields[1].size(), dim);
        if (r1.ec == std::errc() && r1.ptr == fields[0].data() + fields[0].size() &&
            r2.ec == std::errc() && r2.ptr == fields[1].data() + fields[1].size() &&
            count >= 0 && dim > 0) {
          emb.dim = static_cast<int>(dim);
          continue;
        }
      }
    }
    if (fields.size() < 2) {
      ++emb.skipped_lines;
      continue;
    }
    const int dim = static_cast<int>(fields.size()) - 1;
    if (emb.dim == 0) emb.dim = dim;
    if (dim != emb.dim) {
      ++emb.skipped_lines;
      continue;
    }
    Vec v(dim);
    bool ok = true;
    for (int k = 0; k < dim && ok; ++k) {
      const std::string& f = fields[static_cast<std::size_t>(k) + 1];
      double x = 0;
      const auto r = std::from_chars(f.data(), f.data() + f.size(), x);
      ok = r.ec == std::errc() && r.ptr == f.data() + f.size();
      v[k] = x;
    }
    if (!ok) {
      ++emb.skipped_lines;
      continue;
    }
    if (!seen.insert(fields[0]).second) {
      ++emb.duplicate_words;  // first occurrence wins
      continue;
    }
    emb.words.push_back(fields[0]);
    emb.vectors.push_back(std::move(v));
  }
  return emb;
}

PreEmbeddings read_embeddings_text_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return read_embeddings_text(in);
}

LookupTable load_embeddings(const std::string& path, int expected_dim) {
  return build_pre_table(read_embeddings_text_file(path), expected_dim);
}

std::pair<std::vector<RelationInstance>, std::vector<RelationInstance>>
split_dev(const std::vector<RelationInstance>& all, int dev_size,
          std::uint64_t seed) {
  if (dev_size < 0 || dev_size > static_cast<int>(all.size())) {
    throw ConfigError("dev split size " + std::to_string(dev_size) +
                      " out of range for " + std::to_string(all.size()) +
                      " instances");
  }
  std::vector<int> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(idx);
  std::pair<std::vector<RelationInstance>, std::vector<RelationInstance>> r;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (static_cast<int>(i) < dev_size) {
      r.second.push_back(all[static_cast<std::size_t>(idx[i])]);
    } else {
      r.first.push_back(all[static_cast<std::size_t>(idx[i])]);
    }
  }
  return r;
}

}  // namespace relclass
