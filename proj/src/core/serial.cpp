#include "core/serial.hpp"

#include <cstring>
#include <fstream>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'T', 'E', 'N', 'S', '1', '\n'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.gcount() == sizeof(T), "tensor file: truncated");
  return v;
}

}  // namespace

void TensorFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "tensor file: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::string header = meta.dump();
  put<uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put<int64_t>(out, t.dim(i));
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
  }
  require(out.good(), "tensor file: short write to " + path);
}

TensorFile TensorFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "tensor file: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, "tensor file: bad magic in " + path);
  TensorFile tf;
  const auto hlen = take<uint64_t>(in);
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  require(in.gcount() == static_cast<std::streamsize>(hlen), "tensor file: truncated header");
  tf.meta = json::parse(header);
  const auto n = take<uint64_t>(in);
  for (uint64_t k = 0; k < n; ++k) {
    const auto nlen = take<uint32_t>(in);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    require(in.gcount() == static_cast<std::streamsize>(nlen), "tensor file: truncated name");
    const auto ndim = take<uint32_t>(in);
    std::vector<long> shape(ndim);
    for (auto& d : shape) d = static_cast<long>(take<int64_t>(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
    require(in.gcount() == static_cast<std::streamsize>(t.size() * 8), "tensor file: truncated data");
    tf.tensors.emplace(std::move(name), std::move(t));
  }
  return tf;
}

const Tensor& TensorFile::get(const std::string& name) const {
  auto it = tensors.find(name);
  require(it != tensors.end(), "tensor file: missing tensor '" + name + "'");
  return it->second;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "file_hash: cannot open " + path);
  uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_text_file: cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_text_file: cannot open " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(out.good(), "write_text_file: short write to " + path);
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) { return json::parse(read_text_file(path)); }

}  // namespace mealgen
