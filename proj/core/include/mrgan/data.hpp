#pragma once

#include <string>
#include <vector>

#include "mrgan/rng.hpp"
#include "mrgan/tensor.hpp"

namespace mrgan {

// One loaded dataset part: examples [n, ...] plus labels (empty when the part
// is unlabeled).
struct DataPart {
  Tensor examples;
  std::vector<std::size_t> labels;

  std::size_t count() const { return examples.rank() >= 1 ? examples.extent(0) : 0; }
  Tensor rows(const std::vector<std::size_t>& idx) const;
};

// Labeled / unlabeled / validation / test with deterministic provenance. The
// four parts are pairwise disjoint; the unsupervised training pool is the
// union of `labeled` and `unlabeled` (see unsupervised_pool()).
struct SplitDataset {
  DataPart labeled;
  DataPart unlabeled;  // the non-labeled remainder of the training data
  DataPart validation;
  DataPart test;
  std::uint64_t split_seed = 0;
  std::string source;

  // All training examples (labeled + remainder): what the unsupervised GAN
  // terms see.
  DataPart unsupervised_pool() const;
};

struct SyntheticManifoldSpec {
  std::string kind;  // circle | two-moons | swiss-roll-2d
  std::size_t samples = 0;
  double noise = 0.0;
  std::size_t classes() const;
};

// ---- IDX binary format -------------------------------------------------------
// Big-endian magic (0x00000803 u8 rank-3 images, 0x00000801 u8 rank-1 labels),
// big-endian u32 extents, raw u8 payload. Pixels map through v/127.5 - 1.

Tensor idx_load_images(const std::string& path);        // [n,h,w] in [-1,1]
std::vector<std::size_t> idx_load_labels(const std::string& path);
void idx_write_images(const std::string& path, const Tensor& images);  // inverse mapping
void idx_write_labels(const std::string& path, const std::vector<std::size_t>& labels);

// In-memory variants for fixtures.
Tensor idx_parse_images(const std::vector<unsigned char>& bytes, const std::string& origin);
std::vector<unsigned char> idx_encode_images(const Tensor& images);

// ---- synthetic manifolds -------------------------------------------------------

// Samples the manifold, assigns classes, and rescales coordinates into
// [-1,1] (uniform scale, centered). Examples are [n,2].
DataPart synth_sample(const SyntheticManifoldSpec& spec, std::uint64_t seed);

// Raw (pre-rescale) samples, for geometric oracles in tests.
DataPart synth_sample_raw(const SyntheticManifoldSpec& spec, std::uint64_t seed);

// ---- splitting and batching ----------------------------------------------------

// Deterministic split: a class-balanced labeled subset (n_labeled must divide
// evenly by the class count), a validation subset disjoint from training, and
// the remaining training examples as the unlabeled part. `test` is attached
// separately by the caller.
SplitDataset make_split(const DataPart& train, std::size_t n_labeled, std::size_t n_validation,
                        std::uint64_t seed);

// Index batches for one epoch: a seeded permutation cut into full batches
// (the final short batch is dropped).
std::vector<std::vector<std::size_t>> batches(std::size_t part_size, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch);

// `count` batches sampled with replacement, for labeled sets smaller than an
// epoch's demand.
std::vector<std::vector<std::size_t>> batches_with_replacement(std::size_t part_size,
                                                               std::size_t batch_size,
                                                               std::size_t count,
                                                               std::uint64_t seed,
                                                               std::uint64_t epoch);

}  // namespace mrgan
