#include "tomsyn/neural/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "tomsyn/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts "
              "unsupported");

namespace tomsyn::neural {
namespace {

constexpr std::string_view kMagic = "tomsyn-checkpoint v1\n";

void append_u64(std::string& buf, std::uint64_t v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

void append_str(std::string& buf, const std::string& s) {
  append_u64(buf, s.size());
  buf.append(s);
}

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string where)
      : data_(data), size_(size), where_(std::move(where)) {}

  std::uint64_t u64() {
    if (pos_ + sizeof(std::uint64_t) > size_) truncated();
    std::uint64_t v;
    std::memcpy(&v, data_ + pos_, sizeof(v));
    pos_ += sizeof(v);
    return v;
  }
  std::string str() {
    const std::uint64_t len = u64();
    if (pos_ + len > size_) truncated();
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }
  std::vector<float> floats() {
    const std::uint64_t count = u64();
    if (pos_ + count * sizeof(float) > size_) truncated();
    std::vector<float> v(count);
    std::memcpy(v.data(), data_ + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
    return v;
  }
  bool done() const { return pos_ == size_; }

 private:
  [[noreturn]] void truncated() const {
    throw IntegrityError(where_ + ": truncated checkpoint payload");
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string where_;
};

std::uint32_t crc_of(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  std::string payload;
  append_str(payload, data.architecture);
  append_u64(payload, data.arrays.size());
  for (const auto& [name, values] : data.arrays) {
    append_str(payload, name);
    append_u64(payload, values.size());
    payload.append(reinterpret_cast<const char*>(values.data()),
                   values.size() * sizeof(float));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  const std::uint64_t len = payload.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint32_t crc = crc_of(payload);
  f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  if (!f.good()) throw InputError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);

  std::string magic(kMagic.size(), '\0');
  f.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!f || magic != kMagic) {
    throw IntegrityError(path + ": not a checkpoint file");
  }
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!f) throw IntegrityError(path + ": truncated checkpoint");
  std::string payload(len, '\0');
  f.read(payload.data(), static_cast<std::streamsize>(len));
  std::uint32_t stored_crc = 0;
  f.read(reinterpret_cast<char*>(&stored_crc), sizeof(stored_crc));
  if (!f) throw IntegrityError(path + ": truncated checkpoint");
  if (crc_of(payload) != stored_crc) {
    throw IntegrityError(path + ": checksum mismatch, checkpoint corrupted");
  }

  Reader r(payload.data(), payload.size(), path);
  CheckpointData data;
  data.architecture = r.str();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    data.arrays.emplace_back(std::move(name), r.floats());
  }
  if (!r.done()) {
    throw IntegrityError(path + ": trailing bytes in checkpoint payload");
  }
  return data;
}

}  // namespace tomsyn::neural
