// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include "pald/experiments/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <sstream>

#include "pald/error.hpp"
#include "pald/experiments/config.hpp"
#include "pald/experiments/csv.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace pald::exp {
namespace {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > remaining()) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string serialize_arrays(const ParameterSet& params) {
  std::string out;
  put<std::uint32_t>(out, std::uint32_t(params.size()));
  for (const auto& [name, t] : params) {  // std::map: lexicographic order
    put<std::uint32_t>(out, std::uint32_t(name.size()));
    out += name;
    put<std::uint32_t>(out, std::uint32_t(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put<float>(out, static_cast<float>(v));
  }
  return out;
}

std::string strip_hash(std::string_view metadata) {
  std::string out;
  std::istringstream in{std::string(metadata)};
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("content_hash", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

std::string metadata_value(std::string_view metadata, std::string_view key) {
  std::istringstream in{std::string(metadata)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto k = line.substr(0, eq);
    while (!k.empty() && k.back() == ' ') k.pop_back();
    if (k != key) continue;
    auto v = line.substr(eq + 1);
    while (!v.empty() && v.front() == ' ') v.erase(v.begin());
    return v;
  }
  return {};
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const std::string arrays = serialize_arrays(ckpt.params);
  const std::string meta = strip_hash(ckpt.metadata) + "content_hash = " + blob_hash(arrays) + "\n";
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, std::uint32_t(meta.size()));
  out += meta;
  out += arrays;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kCheckpointMagic, 4))
    throw FormatError("not a checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  const auto meta_len = r.get<std::uint32_t>("metadata length");
  ckpt.metadata = std::string(r.take(meta_len, "metadata"));
  const std::string_view arrays = bytes.substr(bytes.size() - r.remaining());

  const auto count = r.get<std::uint32_t>("array count");
  for (std::uint32_t a = 0; a < count; ++a) {
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name(r.take(name_len, "name"));
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 8) throw FormatError("checkpoint array '" + name + "' has implausible rank");
    Shape shape;
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = r.get<std::uint64_t>("dims");
      if (d != 0 && total > std::numeric_limits<std::uint64_t>::max() / d)
        throw FormatError("checkpoint array '" + name + "' dimension overflow");
      total *= d;
      shape.push_back(std::size_t(d));
    }
    if (total > r.remaining() / sizeof(float))
      throw FormatError("checkpoint array '" + name + "' exceeds file size");
    std::vector<double> values(total);
    for (auto& v : values) v = r.get<float>("values");
    if (ckpt.params.contains(name)) throw FormatError("duplicate checkpoint array '" + name + "'");
    ckpt.params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint arrays");
  const std::string expected = metadata_value(ckpt.metadata, "content_hash");
  if (!expected.empty() && expected != blob_hash(arrays))
    throw FormatError("checkpoint content hash mismatch");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  atomic_write(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

ParameterSet round_to_f32(const ParameterSet& params) {
  ParameterSet out;
  for (const auto& [name, t] : params) {
    Tensor r = t;
    for (auto& v : r.data()) v = double(static_cast<float>(v));
    out.add(name, std::move(r));
  }
  return out;
}

void restore_params(ParameterSet& target, const ParameterSet& loaded) {
  if (target.size() != loaded.size())
    throw FormatError("checkpoint has " + std::to_string(loaded.size()) + " arrays, model expects " +
                      std::to_string(target.size()));
  for (auto& [name, t] : target) {
    if (!loaded.contains(name)) throw FormatError("checkpoint is missing array '" + name + "'");
    const Tensor& src = loaded.at(name);
    if (src.shape() != t.shape())
      throw FormatError("checkpoint array '" + name + "' has shape " + shape_string(src.shape()) +
                        ", model expects " + shape_string(t.shape()));
    t = src;
  }
}

}  // namespace pald::exp
