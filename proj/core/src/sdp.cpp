#include "relclass/sdp.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "relclass/errors.hpp"

namespace relclass {

namespace {

[[noreturn]] void fail_line(int lineno, const std::string& msg) {
  throw DataError("line " + std::to_string(lineno) + ": " + msg);
}

bool parse_int(const std::string& s, int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

std::vector<DepSentence> parse_conllu(std::istream& in) {
  std::vector<DepSentence> out;
  DepSentence cur;
  std::string pending_id;
  int expect_id = 1;
  int lineno = 0;
  std::string line;

  auto flush = [&]() {
    if (cur.tokens.empty()) return;
    cur.id = pending_id.empty() ? std::to_string(out.size() + 1) : pending_id;
    out.push_back(std::move(cur));
    cur = DepSentence{};
    pending_id.clear();
    expect_id = 1;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string key = "# sent_id";
      if (line.compare(0, key.size(), key) == 0) {
        const std::size_t eq = line.find('=');
        if (eq != std::string::npos) {
          std::size_t b = eq + 1;
          while (b < line.size() && line[b] == ' ') ++b;
          pending_id = line.substr(b);
        }
      }
      continue;
    }
    std::vector<std::string> cols;
    {
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          cols.push_back(line.substr(start, i - start));
          start = i + 1;
        }
      }
    }
    if (cols.size() < 8) {
      fail_line(lineno, "expected >= 8 tab-separated columns, got " +
                            std::to_string(cols.size()));
    }
    // Multiword ranges (1-2) and empty nodes (1.1) carry no tree structure.
    if (cols[0].find('-') != std::string::npos ||
        cols[0].find('.') != std::string::npos) {
      continue;
    }
    int id = 0, head = 0;
    if (!parse_int(cols[0], id)) fail_line(lineno, "bad token id '" + cols[0] + "'");
    if (id != expect_id) {
      fail_line(lineno, "token id " + std::to_string(id) + ", expected " +
                            std::to_string(expect_id));
    }
    ++expect_id;
    if (!parse_int(cols[6], head) || head < 0) {
      fail_line(lineno, "bad head '" + cols[6] + "'");
    }
    cur.tokens.push_back({cols[1], head, cols[7]});
  }
  flush();
  return out;
}

std::vector<DepSentence> parse_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return parse_conllu(in);
}

void attach_spans(std::vector<DepSentence>& sents, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::unordered_map<std::string, EntitySpans> by_id;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_line(lineno, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("former") ||
        !j.contains("latter")) {
      fail_line(lineno, "expected {id, former, latter}");
    }
    auto span = [&](const char* key) -> std::pair<int, int> {
      const nlohmann::json& s = j.at(key);
      if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() ||
          !s[1].is_number_integer()) {
        fail_line(lineno, std::string("'") + key + "' must be [start, end]");
      }
      return {s[0].get<int>(), s[1].get<int>()};
    };
    const auto [fs, fe] = span("former");
    const auto [ls, le] = span("latter");
    const std::string id = j.at("id").is_string()
                               ? j.at("id").get<std::string>()
                               : j.at("id").dump();
    if (!by_id.emplace(id, EntitySpans{fs, fe, ls, le}).second) {
      fail_line(lineno, "duplicate spans for sentence '" + id + "'");
    }
  }
  for (DepSentence& s : sents) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) continue;
    validate(it->second, static_cast<int>(s.tokens.size()));
    s.spans = it->second;
    s.has_spans = true;
  }
}

void validate_tree(const DepSentence& sent) {
  const int n = static_cast<int>(sent.tokens.size());
  if (n == 0) throw DataError("sentence '" + sent.id + "': empty");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = sent.tokens[static_cast<std::size_t>(i)].head;
    if (h < 0 || h > n) {
      throw DataError("sentence '" + sent.id + "': token " +
                      std::to_string(i + 1) + " head " + std::to_string(h) +
                      " out of range");
    }
    if (h == i + 1) {
      throw DataError("sentence '" + sent.id + "': token " +
                      std::to_string(i + 1) + " is its own head");
    }
    if (h == 0) ++roots;
  }
  if (roots != 1) {
    throw DataError("sentence '" + sent.id + "': " + std::to_string(roots) +
                    " roots, expected exactly 1");
  }
  // Walking up must reach the root within n steps from every token.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    int steps = 0;
    while (cur != 0) {
      cur = sent.tokens[static_cast<std::size_t>(cur - 1)].head;
      if (++steps > n) {
        throw DataError("sentence '" + sent.id + "': head cycle through token " +
                        std::to_string(i + 1));
      }
    }
  }
}

std::vector<int> shortest_dep_path(const DepSentence& sent, int a, int b) {
  validate_tree(sent);
  const int n = static_cast<int>(sent.tokens.size());
  if (a < 0 || a >= n || b < 0 || b >= n) {
    throw DataError("sentence '" + sent.id + "': path endpoints " +
                    std::to_string(a) + "," + std::to_string(b) +
                    " out of range");
  }
  // Ancestor chain of a (inclusive, 0-based; -1 marks the virtual root).
  std::vector<int> up_a;
  std::unordered_map<int, int> pos_in_a;
  for (int cur = a;;) {
    pos_in_a.emplace(cur, static_cast<int>(up_a.size()));
    up_a.push_back(cur);
    const int h = sent.tokens[static_cast<std::size_t>(cur)].head;
    if (h == 0) break;
    cur = h - 1;
  }
  // Climb from b until the chains meet.
  std::vector<int> up_b;
  int meet = -1;
  for (int cur = b;;) {
    auto it = pos_in_a.find(cur);
    if (it != pos_in_a.end()) {
      meet = it->second;
      break;
    }
    up_b.push_back(cur);
    const int h = sent.tokens[static_cast<std::size_t>(cur)].head;
    if (h == 0) {
      throw DataError("sentence '" + sent.id + "': tokens are not connected");
    }
    cur = h - 1;
  }
  std::vector<int> path(up_a.begin(), up_a.begin() + meet + 1);
  for (std::size_t i = up_b.size(); i-- > 0;) path.push_back(up_b[i]);
  return path;
}

OverlapStats overlap_stats(const std::vector<DepSentence>& corpus) {
  OverlapStats st;
  for (const DepSentence& sent : corpus) {
    if (!sent.has_spans) {
      ++st.skipped;
      continue;
    }
    const int n = static_cast<int>(sent.tokens.size());
    validate(sent.spans, n);
    const Segments segs = segment(n, sent.spans);
    st.middle_count += segs.middle.size();

    const int a = sent.spans.former_end;
    const int b = sent.spans.latter_end;
    const std::vector<int> path = shortest_dep_path(sent, a, b);
    std::unordered_set<int> sdp_words(path.begin() + 1, path.end() - 1);
    st.sdp_count += static_cast<long long>(sdp_words.size());
    for (int t : sdp_words) {
      if (t >= segs.middle.begin && t < segs.middle.end) ++st.both_count;
    }
    ++st.sentences;
  }
  return st;
}

}  // namespace relclass
