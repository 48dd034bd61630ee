#include "relclass/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "relclass/errors.hpp"

namespace relclass {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_doubles(std::ostream& out, std::span<const double> xs) {
  out.write(reinterpret_cast<const char*>(xs.data()),
            static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

struct Reader {
  std::ifstream in;
  std::string path;

  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw DataError("truncated checkpoint: " + path);
    }
  }
  std::uint32_t u32() {
    char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
  }
  std::string string() {
    const std::uint64_t n = u64();
    if (n > (1ull << 32)) throw DataError("corrupt checkpoint: " + path);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void doubles(std::span<double> xs) {
    bytes(reinterpret_cast<char*>(xs.data()), xs.size() * sizeof(double));
  }
};

struct SaveVisitor final : ParamVisitor {
  std::ostream& out;
  explicit SaveVisitor(std::ostream& o) : out(o) {}
  void mat(MatParam& p) override {
    out.put('M');
    put_string(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    put_doubles(out, p.value.raw());
  }
  void vec(VecParam& p) override {
    out.put('V');
    put_string(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.value.dim()));
    put_u32(out, 0);
    put_doubles(out, p.value.span());
  }
};

struct CountVisitor final : ParamVisitor {
  std::uint32_t count = 0;
  void mat(MatParam&) override { ++count; }
  void vec(VecParam&) override { ++count; }
};

struct LoadVisitor final : ParamVisitor {
  Reader& r;
  explicit LoadVisitor(Reader& rd) : r(rd) {}

  void check_header(char kind, const std::string& name, std::uint32_t rows,
                    std::uint32_t cols) {
    char k;
    r.bytes(&k, 1);
    const std::string stored_name = r.string();
    const std::uint32_t stored_rows = r.u32();
    const std::uint32_t stored_cols = r.u32();
    if (k != kind || stored_name != name || stored_rows != rows ||
        stored_cols != cols) {
      throw DataError("checkpoint tensor mismatch: expected " +
                      std::string(1, kind) + " '" + name + "' " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      ", found " + std::string(1, k) + " '" + stored_name +
                      "' " + std::to_string(stored_rows) + "x" +
                      std::to_string(stored_cols));
    }
  }
  void mat(MatParam& p) override {
    check_header('M', p.name, static_cast<std::uint32_t>(p.value.rows()),
                 static_cast<std::uint32_t>(p.value.cols()));
    r.doubles(p.value.raw());
    if (!all_finite(p.value)) {
      throw NumericError("checkpoint tensor '" + p.name +
                         "' contains non-finite values");
    }
  }
  void vec(VecParam& p) override {
    check_header('V', p.name, static_cast<std::uint32_t>(p.value.dim()), 0);
    r.doubles(p.value.span());
    if (!all_finite(p.value)) {
      throw NumericError("checkpoint tensor '" + p.name +
                         "' contains non-finite values");
    }
  }
};

void put_vocab(std::ostream& out, const LookupTable& t) {
  put_u64(out, t.words.size());
  for (const std::string& w : t.words) put_string(out, w);
}

std::vector<std::string> read_vocab(Reader& r) {
  const std::uint64_t n = r.u64();
  if (n == 0 || n > (1ull << 32)) {
    throw DataError("corrupt checkpoint vocabulary: " + r.path);
  }
  std::vector<std::string> words;
  words.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) words.push_back(r.string());
  if (words[0] != kUnk) {
    throw DataError("checkpoint vocabulary does not start with the UNK row");
  }
  return words;
}

// Table rebuilt from stored words; matrix zeroed here, filled by LoadVisitor.
LookupTable rebuild_table(const std::string& name,
                          std::vector<std::string> words, int dim,
                          bool lowercase) {
  LookupTable t;
  t.lowercase = lowercase;
  t.words = std::move(words);
  t.index.reserve(t.words.size());
  for (std::size_t i = 0; i < t.words.size(); ++i) {
    if (!t.index.emplace(t.words[i], static_cast<int>(i)).second) {
      throw DataError("checkpoint vocabulary repeats word '" + t.words[i] + "'");
    }
  }
  t.table = {name, Mat(static_cast<int>(t.words.size()), dim)};
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams& model,
                     const RunConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  // Paths are run-local, not part of the model; dropping them keeps
  // checkpoints byte-identical across runs that only differ in file layout.
  RunConfig stored = config;
  stored.paths = Paths{};
  put_string(out, stored.to_json().dump());
  put_vocab(out, model.feats.pre);
  put_vocab(out, model.feats.ran);
  put_vocab(out, model.feats.chars);
  put_vocab(out, model.feats.pos);
  put_vocab(out, model.feats.wnh);
  CountVisitor counter;
  visit_all(model, counter);
  put_u32(out, counter.count);
  SaveVisitor sv(out);
  visit_all(model, sv);
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw DataError("cannot open checkpoint: " + path);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }

  Checkpoint ck;
  try {
    ck.config = RunConfig::from_json(nlohmann::json::parse(r.string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint config: " + std::string(e.what()));
  }

  std::vector<std::string> pre_words = read_vocab(r);
  std::vector<std::string> ran_words = read_vocab(r);
  std::vector<std::string> char_words = read_vocab(r);
  std::vector<std::string> pos_words = read_vocab(r);
  std::vector<std::string> wnh_words = read_vocab(r);

  const HyperParams& hp = ck.config.hp;
  LookupTable pre =
      rebuild_table("pre", std::move(pre_words), hp.n_pre, /*lowercase=*/true);
  BuiltVocabs vocabs;
  vocabs.ran = rebuild_table("ran", std::move(ran_words), hp.n_ran, false);
  vocabs.chars = rebuild_table("char", std::move(char_words), hp.n_char,
                               ck.config.char_lowercase);
  vocabs.pos = rebuild_table("pos", std::move(pos_words), hp.n_pos, false);
  vocabs.wnh = rebuild_table("wnh", std::move(wnh_words), hp.n_wnh, false);

  ck.model = build_model(ck.config, std::move(pre), std::move(vocabs));

  CountVisitor counter;
  visit_all(ck.model, counter);
  const std::uint32_t stored = r.u32();
  if (stored != counter.count) {
    throw DataError("checkpoint holds " + std::to_string(stored) +
                    " tensors, expected " + std::to_string(counter.count));
  }
  LoadVisitor lv(r);
  visit_all(ck.model, lv);
  if (r.in.peek() != std::ifstream::traits_type::eof()) {
    throw DataError("trailing data after checkpoint payload: " + path);
  }
  return ck;
}

}  // namespace relclass
