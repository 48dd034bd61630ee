#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "relclass/relation_head.hpp"

namespace relclass {

struct DepToken {
  std::string form;
  int head = 0;  // 1-based parent id, 0 = root
  std::string rel;
};

// One dependency-parsed sentence; spans attach the two target entities when
// the sidecar provides them.
struct DepSentence {
  std::string id;
  std::vector<DepToken> tokens;
  bool has_spans = false;
  EntitySpans spans;
};

// 10-column CoNLL-U, blank-line separated; only ID, FORM, HEAD (and DEPREL
// when present) are consumed. "# sent_id = ..." comments name sentences;
// unnamed sentences get their 1-based ordinal as id. Multiword/empty-node
// lines (ids with '-' or '.') are skipped.
std::vector<DepSentence> parse_conllu(std::istream& in);
std::vector<DepSentence> parse_conllu_file(const std::string& path);

// JSONL sidecar {"id", "former": [s,e], "latter": [s,e]} keyed by sentence
// id; sentences without a record keep has_spans = false.
void attach_spans(std::vector<DepSentence>& sents, const std::string& path);

// Heads must form a single tree: every index in range, exactly one root,
// no cycles. DataError otherwise.
void validate_tree(const DepSentence& sent);

// Unique undirected tree path between tokens a and b (0-based), endpoints
// included, via the meeting point of the two ancestor chains.
std::vector<int> shortest_dep_path(const DepSentence& sent, int a, int b);

struct OverlapStats {
  long long middle_count = 0;
  long long sdp_count = 0;
  long long both_count = 0;
  int sentences = 0;
  int skipped = 0;  // sentences without spans

  double proportion() const {
    return sdp_count == 0 ? 0.0
                          : static_cast<double>(both_count) / sdp_count;
  }
};

// Corpus-wide counts: middle words are the tokens strictly between the two
// spans; SDP words are the path tokens between the LAST token of each
// entity, endpoints excluded; both = positional intersection.
OverlapStats overlap_stats(const std::vector<DepSentence>& corpus);

}  // namespace relclass
