#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrgan/tensor.hpp"

namespace mrgan {

// Self-describing binary container: named tensors (64-bit little-endian
// values), named byte blobs (rng states, counters), a config echo and the run
// seed. Byte layout is documented in docs/file-formats.md.
struct Checkpoint {
  std::uint64_t seed = 0;
  std::string config_text;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::pair<std::string, std::string>> blobs;

  const Tensor* find_tensor(const std::string& name) const;
  const std::string* find_blob(const std::string& name) const;
  void add_tensor(std::string name, Tensor t) { tensors.emplace_back(std::move(name), std::move(t)); }
  void add_blob(std::string name, std::string b) { blobs.emplace_back(std::move(name), std::move(b)); }
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& origin);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrgan
