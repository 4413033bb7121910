#include "ldrift/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "ldrift/errors.hpp"

namespace ldrift::pipeline {
namespace {

constexpr char kMagic[8] = {'L', 'D', 'R', 'I', 'F', 'T', 'C', 'K'};
constexpr std::uint8_t kTensorKind = 0;
constexpr std::uint8_t kTextKind = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw DataError("checkpoint is truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> body(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(c.tensors().size() + c.texts().size()));
  for (const auto& [name, t] : c.tensors()) {
    w.str(name);
    w.u8(kTensorKind);
    w.u64(t.rows());
    w.u64(t.cols());
    for (double v : t.data()) w.f64(v);
  }
  for (const auto& [name, s] : c.texts()) {
    w.str(name);
    w.u8(kTextKind);
    w.str(s);
  }
  return std::move(w.buffer());
}

}  // namespace

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t params_checksum(const std::vector<std::pair<std::string, const numkit::Tensor*>>& named) {
  Writer w;
  for (const auto& [name, t] : named) {
    w.str(name);
    w.u64(t->rows());
    w.u64(t->cols());
    for (double v : t->data()) w.f64(v);
  }
  return fnv1a(w.buffer());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void Checkpoint::put(const std::string& name, const numkit::Tensor& tensor) {
  if (texts_.count(name)) throw DataError("checkpoint section '" + name + "' already holds text");
  tensors_[name] = tensor;
}

void Checkpoint::put_text(const std::string& name, const std::string& text) {
  if (tensors_.count(name)) throw DataError("checkpoint section '" + name + "' already holds a tensor");
  texts_[name] = text;
}

bool Checkpoint::has(const std::string& name) const { return tensors_.count(name) || texts_.count(name); }

bool Checkpoint::has_block(const std::string& block) const {
  auto it = tensors_.lower_bound(block + "/");
  return it != tensors_.end() && it->first.compare(0, block.size() + 1, block + "/") == 0;
}

const numkit::Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw DataError("checkpoint has no tensor '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::text(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw DataError("checkpoint has no text section '" + name + "'");
  return it->second;
}

void Checkpoint::erase_block(const std::string& block) {
  const std::string prefix = block + "/";
  for (auto it = tensors_.lower_bound(prefix); it != tensors_.end() && it->first.starts_with(prefix);) {
    it = tensors_.erase(it);
  }
}

void Checkpoint::put_block(const std::string& block,
                           const std::vector<std::pair<std::string, const numkit::Tensor*>>& named) {
  erase_block(block);
  for (const auto& [name, t] : named) put(block + "/" + name, *t);
}

void Checkpoint::read_block(const std::string& block,
                            const std::vector<std::pair<std::string, numkit::Tensor*>>& named) const {
  if (!has_block(block)) throw DataError("checkpoint is missing block '" + block + "'");
  for (const auto& [name, t] : named) {
    const auto& stored = tensor(block + "/" + name);
    if (stored.shape() != t->shape()) {
      throw DataError("checkpoint block '" + block + "': " + name + " has shape " + stored.shape().str() +
                      ", expected " + t->shape().str());
    }
    *t = stored;
  }
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  auto bytes = body(*this);
  const std::uint64_t sum = fnv1a(bytes);
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(sum >> (8 * i)));
  return bytes;
}

std::uint64_t Checkpoint::checksum() const { return fnv1a(body(*this)); }

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto content = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  if (fnv1a(content) != tail.u64()) throw DataError("checkpoint checksum mismatch");

  Reader r(content.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  Checkpoint c;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::string name = r.str();
    const std::uint8_t kind = r.u8();
    if (kind == kTensorKind) {
      const std::uint64_t rows = r.u64(), cols = r.u64();
      if (cols != 0 && rows > r.remaining() / 8 / cols) throw DataError("checkpoint is truncated");
      numkit::Tensor t(rows, cols);
      for (auto& v : t.data()) v = r.f64();
      c.put(name, t);
    } else if (kind == kTextKind) {
      c.put_text(name, r.str());
    } else {
      throw DataError("checkpoint section '" + name + "' has unknown kind " + std::to_string(kind));
    }
  }
  if (r.remaining() != 0) throw DataError("checkpoint has trailing bytes");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return deserialize(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace ldrift::pipeline
