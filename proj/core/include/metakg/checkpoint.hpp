#pragma once

#include <map>
#include <string>

#include "metakg/tensor.hpp"

namespace metakg {

// On-disk container for named float64 tensors plus named text entries
// (configs, histories). Little-endian binary, magic "MKGCKPT1".
// Layout, after the 8-byte magic and a u32 version:
//   u64 text entry count, then per entry: u32 key length, key bytes,
//     u64 value length, value bytes
//   u64 tensor entry count, then per entry: u32 key length, key bytes,
//     u32 rank, u64 extents[rank], f64 data[product of extents]
// The format is stable: readers must accept version 1 indefinitely.
struct CheckpointFile {
  std::map<std::string, std::string> text;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const CheckpointFile& ckpt, const std::string& path);
CheckpointFile load_checkpoint(const std::string& path);

}  // namespace metakg
