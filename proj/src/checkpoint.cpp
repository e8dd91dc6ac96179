#include "gki/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace gki {

namespace {

constexpr char kMagic[4] = {'G', 'K', 'I', '1'};

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const unsigned char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

const Checkpoint::Array* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header = ckpt.meta;
  header["dtype"] = "float64";
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : ckpt.arrays) {
    list.push_back({{"name", a.name}, {"shape", {a.value.rows(), a.value.cols()}}});
  }
  header["arrays"] = std::move(list);
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for writing: " + tmp);
    out.write(kMagic, 4);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : ckpt.arrays) {
      for (Eigen::Index i = 0; i < a.value.size(); ++i) put_le<double>(out, a.value.data()[i]);
    }
    if (!out) throw DataError("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place: " + path);
  }
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw DataError("not a GKI1 checkpoint (bad magic): " + path);
  }
  const auto header_len = get_le<std::uint64_t>(buf.data() + 4);
  if (header_len > buf.size() - 12) throw DataError("truncated checkpoint header: " + path);

  Checkpoint ckpt;
  try {
    ckpt.meta = nlohmann::json::parse(buf.begin() + 12,
                                      buf.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint header: " + std::string(e.what()));
  }
  if (ckpt.meta.value("dtype", "") != "float64") {
    throw DataError("unsupported checkpoint dtype in " + path);
  }

  std::size_t offset = 12 + header_len;
  for (const auto& entry : ckpt.meta.at("arrays")) {
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const std::size_t count = static_cast<std::size_t>(rows * cols);
    if (offset + count * 8 > buf.size()) throw DataError("truncated checkpoint data: " + path);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < count; ++i) m.data()[i] = get_le<double>(buf.data() + offset + 8 * i);
    offset += count * 8;
    ckpt.arrays.push_back({entry.at("name").get<std::string>(), std::move(m)});
  }
  ckpt.meta.erase("arrays");
  return ckpt;
}

}  // namespace gki
