#include "metakg/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "metakg/errors.hpp"

namespace metakg {

namespace {

constexpr char kMagic[8] = {'M', 'K', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  uint64_t bits = get_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

std::string get_str(std::istream& is, uint64_t len) {
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const CheckpointFile& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put_u32(os, kVersion);

  put_u64(os, ckpt.text.size());
  for (const auto& [k, v] : ckpt.text) {
    put_u32(os, static_cast<uint32_t>(k.size()));
    os.write(k.data(), static_cast<std::streamsize>(k.size()));
    put_u64(os, v.size());
    os.write(v.data(), static_cast<std::streamsize>(v.size()));
  }

  put_u64(os, ckpt.tensors.size());
  for (const auto& [k, t] : ckpt.tensors) {
    put_u32(os, static_cast<uint32_t>(k.size()));
    os.write(k.data(), static_cast<std::streamsize>(k.size()));
    put_u32(os, static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) put_u64(os, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < t.numel(); ++i) put_f64(os, t.at(i));
  }
  os.flush();
  if (!os) throw DataError("checkpoint: write failed for " + path);
}

CheckpointFile load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }

  CheckpointFile ckpt;
  uint64_t n_text = get_u64(is);
  for (uint64_t i = 0; i < n_text; ++i) {
    uint32_t klen = get_u32(is);
    std::string key = get_str(is, klen);
    uint64_t vlen = get_u64(is);
    ckpt.text[key] = get_str(is, vlen);
  }

  uint64_t n_tensors = get_u64(is);
  for (uint64_t i = 0; i < n_tensors; ++i) {
    uint32_t klen = get_u32(is);
    std::string key = get_str(is, klen);
    uint32_t rank = get_u32(is);
    std::vector<int64_t> shape(rank);
    int64_t numel = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      shape[r] = static_cast<int64_t>(get_u64(is));
      numel *= shape[r];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    for (int64_t j = 0; j < numel; ++j) data[static_cast<size_t>(j)] = get_f64(is);
    ckpt.tensors.emplace(key, Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace metakg
