#include "seqmatch/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "seqmatch/errors.hpp"

namespace seqmatch {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'M', 'M'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const Vector& v) {
    for (double x : v) f64(x);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(Vector& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = f64();
  }
  std::string str() {
    std::uint32_t n = u32();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

 private:
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw ParseError("model file '" + path_ + "' is truncated");
    }
  }
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model,
                const ModelProvenance& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path.string() + "'");
  Writer w(out);

  out.write(kMagic, 4);
  w.u32(kVersion);
  w.u64(provenance.seed);
  w.u64(provenance.config_digest);
  w.str(model.category);

  w.u32(static_cast<std::uint32_t>(model.encoder.layers.size()));
  for (const LstmParams& p : model.encoder.layers) {
    w.u32(static_cast<std::uint32_t>(p.input_dim));
    w.u32(static_cast<std::uint32_t>(p.hidden_dim));
    w.f64s(p.weights.data);
    w.f64s(p.bias);
  }

  w.u32(static_cast<std::uint32_t>(model.ssn.hidden_dim));
  w.u32(static_cast<std::uint32_t>(model.ssn.item_dim));
  w.u32(static_cast<std::uint32_t>(kFc1Dim));
  w.f64s(model.ssn.w1.data);
  w.f64s(model.ssn.b1);
  w.f64s(model.ssn.w2);
  w.f64(model.ssn.b2);

  w.u32(static_cast<std::uint32_t>(model.tree.cfg.leaf_count));
  w.u32(static_cast<std::uint32_t>(model.tree.cfg.level_gate_counts.size()));
  for (std::size_t c : model.tree.cfg.level_gate_counts) {
    w.u32(static_cast<std::uint32_t>(c));
  }
  for (const auto& level : model.tree.gates) {
    for (const Vector& v : level) w.f64s(v);
  }
  out.flush();
  if (!out) throw IoError("write failed for model file '" + path.string() + "'");
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  Reader r(in, path.string());

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("'" + path.string() + "' is not a seqmatch model file");
  }
  LoadedModel out;
  out.version = r.u32();
  if (out.version != kVersion) {
    throw ParseError("model file version " + std::to_string(out.version) +
                     " is not supported");
  }
  out.provenance.seed = r.u64();
  out.provenance.config_digest = r.u64();
  out.model.category = r.str();

  std::uint32_t layers = r.u32();
  if (layers == 0) throw ParseError("model file has no encoder layers");
  for (std::uint32_t l = 0; l < layers; ++l) {
    LstmParams p;
    p.input_dim = r.u32();
    p.hidden_dim = r.u32();
    p.weights = Matrix(4 * p.hidden_dim, p.hidden_dim + p.input_dim);
    r.f64s(p.weights.data, p.weights.rows * p.weights.cols);
    r.f64s(p.bias, 4 * p.hidden_dim);
    out.model.encoder.layers.push_back(std::move(p));
  }

  SsnParams& ssn = out.model.ssn;
  ssn.hidden_dim = r.u32();
  ssn.item_dim = r.u32();
  std::uint32_t fc1 = r.u32();
  if (fc1 != kFc1Dim) {
    throw ParseError("model file fc1 width " + std::to_string(fc1) +
                     " does not match this build (" + std::to_string(kFc1Dim) + ")");
  }
  ssn.w1 = Matrix(kFc1Dim, ssn.hidden_dim + ssn.item_dim);
  r.f64s(ssn.w1.data, ssn.w1.rows * ssn.w1.cols);
  r.f64s(ssn.b1, kFc1Dim);
  r.f64s(ssn.w2, kFc1Dim);
  ssn.b2 = r.f64();

  TreeConfig tc;
  tc.leaf_count = r.u32();
  std::uint32_t n_levels = r.u32();
  tc.level_gate_counts.clear();
  for (std::uint32_t l = 0; l < n_levels; ++l) tc.level_gate_counts.push_back(r.u32());
  out.model.tree = init_tree(tc);
  for (auto& level : out.model.tree.gates) {
    for (Vector& v : level) r.f64s(v, kGateDim);
  }
  return out;
}

std::uint64_t text_digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace seqmatch
