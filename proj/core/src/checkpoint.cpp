#include "mrgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::vector<unsigned char>& out, const std::string& s) {
  put_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;
  std::string origin;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size()) {
      throw FormatError(origin + ": truncated checkpoint while reading " + what + " (need " +
                        std::to_string(n) + " bytes at offset " + std::to_string(pos) +
                        ", file has " + std::to_string(bytes.size()) + ")");
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint64_t n = u64(what);
    need(n, what);
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const std::string* Checkpoint::find_blob(const std::string& name) const {
  for (const auto& [n, b] : blobs) {
    if (n == name) return &b;
  }
  return nullptr;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<unsigned char> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u32(out, kVersion);
  put_u64(out, ckpt.seed);
  put_str(out, ckpt.config_text);
  put_u64(out, ckpt.tensors.size());
  for (const auto& [name, tensor] : ckpt.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t e : tensor.shape()) put_u64(out, e);
    for (double v : tensor.values()) put_f64(out, v);
  }
  put_u64(out, ckpt.blobs.size());
  for (const auto& [name, blob] : ckpt.blobs) {
    put_str(out, name);
    put_str(out, blob);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes,
                             const std::string& origin) {
  Reader r{bytes, 0, origin};
  r.need(8, "magic");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError(origin + ": bad checkpoint magic, expected MRGCKPT1");
  }
  r.pos = 8;
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw FormatError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.seed = r.u64("seed");
  ckpt.config_text = r.str("config echo");
  const std::uint64_t tensor_count = r.u64("tensor count");
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    std::string name = r.str("tensor name");
    const std::uint32_t rank = r.u32("tensor rank");
    Shape shape(rank);
    for (auto& e : shape) e = r.u64("tensor extent");
    Tensor t(shape);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = r.f64("tensor values");
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  const std::uint64_t blob_count = r.u64("blob count");
  for (std::uint64_t i = 0; i < blob_count; ++i) {
    std::string name = r.str("blob name");
    std::string blob = r.str("blob payload");
    ckpt.blobs.emplace_back(std::move(name), std::move(blob));
  }
  if (r.pos != bytes.size()) {
    throw FormatError(origin + ": trailing bytes after checkpoint payload (offset " +
                      std::to_string(r.pos) + " of " + std::to_string(bytes.size()) + ")");
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  std::vector<unsigned char> bytes(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>{});
  return decode_checkpoint(bytes, path);
}

}  // namespace mrgan
