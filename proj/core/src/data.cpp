#include "mrgan/data.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;  // u8, rank 3
constexpr std::uint32_t kLabelMagic = 0x00000801;  // u8, rank 1

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Tensor DataPart::rows(const std::vector<std::size_t>& idx) const {
  const std::size_t n = count();
  const std::size_t stride = n == 0 ? 0 : examples.size() / n;
  Shape out_shape = examples.shape();
  out_shape[0] = idx.size();
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < n, "DataPart::rows: index out of range");
    const double* src = examples.data() + idx[i] * stride;
    double* dst = out.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) dst[j] = src[j];
  }
  return out;
}

DataPart SplitDataset::unsupervised_pool() const {
  DataPart pool;
  const std::size_t nl = labeled.count(), nu = unlabeled.count();
  Shape shape = labeled.examples.shape();
  shape[0] = nl + nu;
  pool.examples = Tensor(std::move(shape));
  const std::size_t stride = nl + nu == 0 ? 0 : pool.examples.size() / (nl + nu);
  for (std::size_t i = 0; i < nl * stride; ++i) pool.examples[i] = labeled.examples[i];
  for (std::size_t i = 0; i < nu * stride; ++i) {
    pool.examples[nl * stride + i] = unlabeled.examples[i];
  }
  return pool;
}

std::size_t SyntheticManifoldSpec::classes() const { return 2; }

Tensor idx_parse_images(const std::vector<unsigned char>& bytes, const std::string& origin) {
  if (bytes.size() < 4) {
    throw FormatError(origin + ": truncated IDX header, have " + std::to_string(bytes.size()) +
                      " bytes, need at least 4");
  }
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != kImageMagic) {
    throw FormatError(origin + ": bad IDX magic, expected " + hex32(kImageMagic) + ", found " +
                      hex32(magic));
  }
  if (bytes.size() < 16) {
    throw FormatError(origin + ": truncated IDX dimensions, have " +
                      std::to_string(bytes.size()) + " bytes, need 16");
  }
  const std::size_t n = read_be32(bytes.data() + 4);
  const std::size_t h = read_be32(bytes.data() + 8);
  const std::size_t w = read_be32(bytes.data() + 12);
  const std::size_t payload = n * h * w;
  if (bytes.size() != 16 + payload) {
    throw FormatError(origin + ": IDX payload size mismatch, header promises " +
                      std::to_string(payload) + " bytes, file carries " +
                      std::to_string(bytes.size() - 16));
  }
  Tensor out({n, h, w});
  for (std::size_t i = 0; i < payload; ++i) {
    out[i] = static_cast<double>(bytes[16 + i]) / 127.5 - 1.0;
  }
  return out;
}

std::vector<unsigned char> idx_encode_images(const Tensor& images) {
  require(images.rank() == 3, "idx_encode_images: images must be [n,h,w], got " +
                                  shape_str(images.shape()));
  std::vector<unsigned char> out;
  out.reserve(16 + images.size());
  write_be32(out, kImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.extent(0)));
  write_be32(out, static_cast<std::uint32_t>(images.extent(1)));
  write_be32(out, static_cast<std::uint32_t>(images.extent(2)));
  for (double v : images.values()) {
    const double u = std::round((v + 1.0) * 127.5);
    out.push_back(static_cast<unsigned char>(u < 0.0 ? 0.0 : (u > 255.0 ? 255.0 : u)));
  }
  return out;
}

Tensor idx_load_images(const std::string& path) {
  return idx_parse_images(read_file(path), path);
}

std::vector<std::size_t> idx_load_labels(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 4) {
    throw FormatError(path + ": truncated IDX header, have " + std::to_string(bytes.size()) +
                      " bytes, need at least 4");
  }
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != kLabelMagic) {
    throw FormatError(path + ": bad IDX magic, expected " + hex32(kLabelMagic) + ", found " +
                      hex32(magic));
  }
  if (bytes.size() < 8) {
    throw FormatError(path + ": truncated IDX dimensions");
  }
  const std::size_t n = read_be32(bytes.data() + 4);
  if (bytes.size() != 8 + n) {
    throw FormatError(path + ": IDX payload size mismatch, header promises " +
                      std::to_string(n) + " bytes, file carries " +
                      std::to_string(bytes.size() - 8));
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = bytes[8 + i];
  return labels;
}

void idx_write_images(const std::string& path, const Tensor& images) {
  write_file(path, idx_encode_images(images));
}

void idx_write_labels(const std::string& path, const std::vector<std::size_t>& labels) {
  std::vector<unsigned char> out;
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (std::size_t v : labels) {
    require(v <= 255, "idx_write_labels: label " + std::to_string(v) + " exceeds u8");
    out.push_back(static_cast<unsigned char>(v));
  }
  write_file(path, out);
}

namespace {

DataPart synth_raw(const SyntheticManifoldSpec& spec, std::uint64_t seed) {
  require(spec.noise >= 0.0, "synth_sample: noise must be >= 0");
  require(spec.samples >= 1, "synth_sample: need at least one sample");
  Rng rng(derive_seed(seed, "synth/" + spec.kind));
  const std::size_t n = spec.samples;
  DataPart part;
  part.examples = Tensor({n, 2});
  part.labels.resize(n);
  if (spec.kind == "circle") {
    // Unit circle; class = sign of cos(theta).
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      part.examples[i * 2 + 0] = std::cos(theta) + spec.noise * rng.gaussian();
      part.examples[i * 2 + 1] = std::sin(theta) + spec.noise * rng.gaussian();
      part.labels[i] = std::cos(theta) >= 0.0 ? 1 : 0;
    }
  } else if (spec.kind == "two-moons") {
    // Two interleaved half circles, the usual benchmark geometry.
    for (std::size_t i = 0; i < n; ++i) {
      const bool upper = i % 2 == 0;
      const double theta = rng.uniform(0.0, std::numbers::pi);
      double x, y;
      if (upper) {
        x = std::cos(theta);
        y = std::sin(theta);
      } else {
        x = 1.0 - std::cos(theta);
        y = 0.5 - std::sin(theta);
      }
      part.examples[i * 2 + 0] = x + spec.noise * rng.gaussian();
      part.examples[i * 2 + 1] = y + spec.noise * rng.gaussian();
      part.labels[i] = upper ? 0 : 1;
    }
  } else if (spec.kind == "swiss-roll-2d") {
    // Two interleaved spirals r = a + b*t, one per class.
    for (std::size_t i = 0; i < n; ++i) {
      const bool first = i % 2 == 0;
      const double t = rng.uniform(0.5 * std::numbers::pi, 2.5 * std::numbers::pi);
      const double r = 0.1 + 0.3 * t;
      const double phase = first ? 0.0 : std::numbers::pi;
      part.examples[i * 2 + 0] = r * std::cos(t + phase) + spec.noise * rng.gaussian();
      part.examples[i * 2 + 1] = r * std::sin(t + phase) + spec.noise * rng.gaussian();
      part.labels[i] = first ? 0 : 1;
    }
  } else {
    throw ConfigError("synth_sample: unknown manifold kind '" + spec.kind + "'");
  }
  return part;
}

}  // namespace

DataPart synth_sample_raw(const SyntheticManifoldSpec& spec, std::uint64_t seed) {
  return synth_raw(spec, seed);
}

DataPart synth_sample(const SyntheticManifoldSpec& spec, std::uint64_t seed) {
  DataPart part = synth_raw(spec, seed);
  // Center, then apply one uniform scale so everything fits in [-1,1].
  const std::size_t n = part.count();
  double lo[2] = {part.examples[0], part.examples[1]};
  double hi[2] = {part.examples[0], part.examples[1]};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      lo[j] = std::min(lo[j], part.examples[i * 2 + j]);
      hi[j] = std::max(hi[j], part.examples[i * 2 + j]);
    }
  }
  const bool already_inside = lo[0] >= -1.0 && lo[1] >= -1.0 && hi[0] <= 1.0 && hi[1] <= 1.0;
  if (!already_inside) {
    const double c[2] = {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
    double half = std::max(0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1]));
    if (half <= 0.0) half = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        part.examples[i * 2 + j] = (part.examples[i * 2 + j] - c[j]) / half;
      }
    }
  }
  return part;
}

SplitDataset make_split(const DataPart& train, std::size_t n_labeled, std::size_t n_validation,
                        std::uint64_t seed) {
  const std::size_t n = train.count();
  require(train.labels.size() == n, "make_split: training part must be fully labeled");
  require(n_labeled >= 1, "make_split: n_labeled must be >= 1");
  std::size_t n_classes = 0;
  for (std::size_t y : train.labels) n_classes = std::max(n_classes, y + 1);
  require(n_labeled % n_classes == 0, "make_split: n_labeled " + std::to_string(n_labeled) +
                                          " not divisible by class count " +
                                          std::to_string(n_classes));
  require(n_validation < n, "make_split: validation would consume the whole training set");

  // Seeded permutation of all indices (Fisher-Yates).
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(perm[i - 1], perm[j]);
  }

  // Validation takes the head of the permutation.
  std::vector<bool> in_validation(n, false);
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + n_validation);
  for (std::size_t i : val_idx) in_validation[i] = true;

  // Balanced labeled set from the remainder, scanning in permuted order.
  const std::size_t per_class = n_labeled / n_classes;
  std::vector<std::size_t> taken_per_class(n_classes, 0);
  std::vector<bool> in_labeled(n, false);
  std::vector<std::size_t> lab_idx;
  for (std::size_t p = n_validation; p < n && lab_idx.size() < n_labeled; ++p) {
    const std::size_t i = perm[p];
    const std::size_t y = train.labels[i];
    if (taken_per_class[y] < per_class) {
      ++taken_per_class[y];
      in_labeled[i] = true;
      lab_idx.push_back(i);
    }
  }
  require(lab_idx.size() == n_labeled,
          "make_split: not enough examples per class for a balanced labeled set of " +
              std::to_string(n_labeled));

  std::vector<std::size_t> unl_idx;
  for (std::size_t p = n_validation; p < n; ++p) {
    const std::size_t i = perm[p];
    if (!in_labeled[i]) unl_idx.push_back(i);
  }

  SplitDataset out;
  out.split_seed = seed;
  out.labeled.examples = train.rows(lab_idx);
  for (std::size_t i : lab_idx) out.labeled.labels.push_back(train.labels[i]);
  out.unlabeled.examples = train.rows(unl_idx);
  out.validation.examples = train.rows(val_idx);
  for (std::size_t i : val_idx) out.validation.labels.push_back(train.labels[i]);
  return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t part_size, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch) {
  require(batch_size >= 1, "batches: batch_size must be >= 1");
  require(part_size >= 1, "batches: empty part");
  std::vector<std::size_t> perm(part_size);
  for (std::size_t i = 0; i < part_size; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "shuffle/" + std::to_string(epoch)));
  for (std::size_t i = part_size; i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start + batch_size <= part_size; start += batch_size) {
    out.emplace_back(perm.begin() + start, perm.begin() + start + batch_size);
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches_with_replacement(std::size_t part_size,
                                                               std::size_t batch_size,
                                                               std::size_t count,
                                                               std::uint64_t seed,
                                                               std::uint64_t epoch) {
  require(batch_size >= 1, "batches_with_replacement: batch_size must be >= 1");
  require(part_size >= 1, "batches_with_replacement: empty part");
  Rng rng(derive_seed(seed, "resample/" + std::to_string(epoch)));
  std::vector<std::vector<std::size_t>> out(count);
  for (auto& batch : out) {
    batch.resize(batch_size);
    for (auto& idx : batch) idx = rng.uniform_index(part_size);
  }
  return out;
}

}  // namespace mrgan
