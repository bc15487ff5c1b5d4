#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrgan/tensor.hpp"

namespace mrgan {

// Complete declarative description of one training run. Parsed from a
// line-oriented `key = value` file with dotted section prefixes; unknown keys
// are rejected. Every field has a default so a minimal config is valid.
struct RunConfig {
  // run
  std::string mode = "joint";  // joint | two-stage | baseline
  std::string run_name = "run";
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t checkpoint_every = 0;  // epochs; 0 = final checkpoint only

  // data
  std::string data_source = "synthetic";  // synthetic | idx
  std::string data_kind = "two-moons";
  std::size_t data_samples = 1000;
  std::size_t data_test_samples = 1000;
  double data_noise = 0.05;
  std::string data_images, data_labels, data_test_images, data_test_labels;
  std::size_t n_labeled = 8;
  std::size_t n_validation = 100;
  std::uint64_t split_seed = 1;

  // model
  std::string profile = "mlp";  // mlp | conv-small | conv-large | linear
  double width = 1.0;
  std::size_t latent_dim = 100;
  std::size_t classes = 2;
  Shape image_shape = {2};
  double lrelu_slope = 0.2;
  double bn_momentum = 0.9;
  bool generator_weightnorm = false;
  std::string generator_checkpoint;  // required in two-stage mode

  // loss
  double lambda = 1e-3;
  double epsilon = 1e-5;
  std::size_t mc_samples = 0;  // 0 -> batch size
  std::string penalty_target = "logits";

  // train
  std::size_t batch_size = 0;   // 0 -> profile default (25, SVHN profile 50)
  std::size_t epochs = 0;       // 0 -> profile default
  std::size_t decay_start = 0;  // resolved with epochs
  bool decay_start_set = false;
  double adam_alpha = 3e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_decay = 0.999;

  // bookkeeping: keys that were absent and fell back to defaults
  std::vector<std::string> defaulted_keys;

  std::size_t resolved_mc_samples() const { return mc_samples == 0 ? batch_size : mc_samples; }
};

// Parses and validates; throws ConfigError with a field-level message on
// unknown keys, malformed values, or inconsistent settings.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical serialization: every key, fixed order, full precision. Parsing
// the result reproduces the config exactly.
std::string serialize_config(const RunConfig& cfg);

// Serialization plus a comment noting which keys fell back to defaults;
// written next to run outputs.
std::string config_echo(const RunConfig& cfg);

Shape parse_image_shape(const std::string& text);
std::string image_shape_to_string(const Shape& shape);

}  // namespace mrgan
