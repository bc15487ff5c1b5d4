#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrgan/layers.hpp"

namespace mrgan {

// Latent vectors plus (optionally) their unit perturbation directions and the
// perturbation scale.
struct LatentBatch {
  Tensor z;          // [n, d]
  Tensor delta_bar;  // [n, d] unit rows, empty until perturbations are drawn
  double epsilon = 1e-5;

  std::size_t count() const { return z.rank() >= 1 ? z.extent(0) : 0; }
  std::size_t dim() const { return z.rank() >= 2 ? z.extent(1) : 0; }
};

struct GeneratorConfig {
  std::string profile;  // conv-large | conv-small | mlp | linear
  std::vector<LayerSpec> layers;
  std::size_t latent_dim = 100;
  Shape image_shape;  // [c,h,w] for conv profiles, [f] for flat profiles
  double width = 1.0;
  double bn_momentum = 0.9;
};

struct DiscriminatorConfig {
  std::string profile;
  std::vector<LayerSpec> layers;
  Shape image_shape;
  std::size_t classes = 10;  // K real classes; the fake logit is implicit 0
  double width = 1.0;
  double lrelu_slope = 0.2;
  std::string feature_tag = "features";
};

// Architecture profiles. Width scales every internal channel count; the
// image channels, class count and latent width stay fixed.
GeneratorConfig make_generator_config(const std::string& profile, std::size_t latent_dim,
                                      const Shape& image_shape, double width,
                                      bool weight_norm_hidden = false);
DiscriminatorConfig make_discriminator_config(const std::string& profile,
                                              const Shape& image_shape, std::size_t classes,
                                              double width, double lrelu_slope = 0.2);

class Generator {
 public:
  Generator() = default;
  explicit Generator(GeneratorConfig cfg);
  void init(std::uint64_t seed) { net_.init(seed); }

  // z: [n, latent_dim] -> images [n, image_shape...]
  Var forward(Graph& g, Var z, const FwdCtx& ctx);
  Tensor forward_values(const Tensor& z, const FwdCtx& ctx);

  const GeneratorConfig& config() const { return cfg_; }
  Network& net() { return net_; }
  const Network& net() const { return net_; }

 private:
  GeneratorConfig cfg_;
  Network net_;
};

class Discriminator {
 public:
  struct Out {
    Var logits;    // [n, K]
    Var features;  // [n, F], the feature-matching layer h(x)
  };

  Discriminator() = default;
  explicit Discriminator(DiscriminatorConfig cfg);
  void init(std::uint64_t seed) { net_.init(seed); }

  Out forward(Graph& g, Var x, const FwdCtx& ctx);

  const DiscriminatorConfig& config() const { return cfg_; }
  Network& net() { return net_; }
  const Network& net() const { return net_; }

 private:
  DiscriminatorConfig cfg_;
  Network net_;
};

struct ModelPair {
  Generator gen;
  Discriminator disc;
};

// n latent vectors with i.i.d. coordinates uniform on [-1, 1].
LatentBatch sample_latent(std::size_t n, std::size_t d, Rng& rng, double epsilon = 1e-5);

// Draws one fresh Gaussian direction per latent row and normalizes it.
void draw_perturbations(LatentBatch& batch, Rng& rng);

// Rows z0 + t*(z1 - z0) for t = 0, 1/(steps-1), ..., 1.
LatentBatch latent_interpolate(const Tensor& z0, const Tensor& z1, std::size_t steps);

}  // namespace mrgan
