#include "mrgan/model.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

std::size_t scaled(std::size_t channels, double width) {
  const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(channels) * width));
  return s < 1 ? 1 : s;
}

}  // namespace

GeneratorConfig make_generator_config(const std::string& profile, std::size_t latent_dim,
                                      const Shape& image_shape, double width,
                                      bool weight_norm_hidden) {
  require(latent_dim >= 1, "generator config: latent_dim must be >= 1");
  require(width > 0.0, "generator config: width must be positive");
  GeneratorConfig cfg;
  cfg.profile = profile;
  cfg.latent_dim = latent_dim;
  cfg.image_shape = image_shape;
  cfg.width = width;
  if (profile == "conv-large" || profile == "conv-small") {
    require(image_shape.size() == 3 && image_shape[1] == 32 && image_shape[2] == 32,
            "generator config: conv profiles target [c,32,32] images, got " +
                shape_str(image_shape));
    const std::size_t c0 = scaled(512, width);
    const std::size_t c1 = scaled(256, width);
    const std::size_t c2 = scaled(128, width);
    cfg.layers.push_back(LayerSpec::dense(4 * 4 * c0, weight_norm_hidden));
    cfg.layers.push_back(LayerSpec::batch_norm());
    cfg.layers.push_back(LayerSpec::relu());
    cfg.layers.push_back(LayerSpec::reshape({c0, 4, 4}));
    cfg.layers.push_back(LayerSpec::conv_transpose(c1, 5, 2, 2, 1, weight_norm_hidden));
    cfg.layers.push_back(LayerSpec::batch_norm());
    cfg.layers.push_back(LayerSpec::relu());
    cfg.layers.push_back(LayerSpec::conv_transpose(c2, 5, 2, 2, 1, weight_norm_hidden));
    cfg.layers.push_back(LayerSpec::batch_norm());
    cfg.layers.push_back(LayerSpec::relu());
    cfg.layers.push_back(LayerSpec::conv_transpose(image_shape[0], 5, 2, 2, 1, true));
    cfg.layers.push_back(LayerSpec::tanh());
  } else if (profile == "mlp") {
    require(image_shape.size() == 1, "generator config: mlp profile needs a flat image shape");
    const std::size_t h = scaled(64, width);
    cfg.layers.push_back(LayerSpec::dense(h, weight_norm_hidden));
    cfg.layers.push_back(LayerSpec::batch_norm());
    cfg.layers.push_back(LayerSpec::relu());
    cfg.layers.push_back(LayerSpec::dense(h, weight_norm_hidden));
    cfg.layers.push_back(LayerSpec::batch_norm());
    cfg.layers.push_back(LayerSpec::relu());
    cfg.layers.push_back(LayerSpec::dense(image_shape[0], true));
    cfg.layers.push_back(LayerSpec::tanh());
  } else if (profile == "linear") {
    // Diagnostic profile: a single affine map, so the composed f(g(z)) of a
    // linear discriminator has a closed-form Jacobian.
    require(image_shape.size() == 1, "generator config: linear profile needs a flat image shape");
    cfg.layers.push_back(LayerSpec::dense(image_shape[0], false));
  } else {
    throw ConfigError("generator config: unknown profile '" + profile + "'");
  }
  return cfg;
}

DiscriminatorConfig make_discriminator_config(const std::string& profile,
                                              const Shape& image_shape, std::size_t classes,
                                              double width, double lrelu_slope) {
  require(classes >= 1, "discriminator config: classes must be >= 1");
  require(width > 0.0, "discriminator config: width must be positive");
  DiscriminatorConfig cfg;
  cfg.profile = profile;
  cfg.image_shape = image_shape;
  cfg.classes = classes;
  cfg.width = width;
  cfg.lrelu_slope = lrelu_slope;
  if (profile == "conv-large" || profile == "conv-small") {
    require(image_shape.size() == 3,
            "discriminator config: conv profiles need [c,h,w] images, got " +
                shape_str(image_shape));
    const std::size_t c1 = scaled(profile == "conv-large" ? 96 : 64, width);
    const std::size_t c2 = scaled(profile == "conv-large" ? 192 : 128, width);
    cfg.layers.push_back(LayerSpec::dropout(0.2));
    cfg.layers.push_back(LayerSpec::conv(c1, 3, 1, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::conv(c1, 3, 1, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::conv(c1, 3, 2, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::dropout(0.5));
    cfg.layers.push_back(LayerSpec::conv(c2, 3, 1, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::conv(c2, 3, 1, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::conv(c2, 3, 2, 1, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::dropout(0.5));
    cfg.layers.push_back(LayerSpec::conv(c2, 3, 1, 0, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::nin(c2));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::nin(c2));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::global_avg_pool().with_tag(cfg.feature_tag));
    cfg.layers.push_back(LayerSpec::dense(classes, true));
  } else if (profile == "mlp") {
    require(image_shape.size() == 1,
            "discriminator config: mlp profile needs a flat image shape");
    const std::size_t h = scaled(64, width);
    cfg.layers.push_back(LayerSpec::dense(h, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope));
    cfg.layers.push_back(LayerSpec::dense(h, true));
    cfg.layers.push_back(LayerSpec::leaky_relu(lrelu_slope).with_tag(cfg.feature_tag));
    cfg.layers.push_back(LayerSpec::dense(classes, true));
  } else if (profile == "linear") {
    require(image_shape.size() == 1,
            "discriminator config: linear profile needs a flat image shape");
    cfg.layers.push_back(LayerSpec::dense(classes, false).with_tag(cfg.feature_tag));
  } else {
    throw ConfigError("discriminator config: unknown profile '" + profile + "'");
  }
  return cfg;
}

Generator::Generator(GeneratorConfig cfg)
    : cfg_(std::move(cfg)),
      net_("gen", Shape{cfg_.latent_dim}, cfg_.layers, cfg_.bn_momentum) {
  require(net_.output_shape() == cfg_.image_shape,
          "generator: layer stack produces " + shape_str(net_.output_shape()) +
              ", configured image shape is " + shape_str(cfg_.image_shape));
}

Var Generator::forward(Graph& g, Var z, const FwdCtx& ctx) {
  const Tensor& zv = g.tape().value(z);
  require(zv.rank() == 2 && zv.extent(1) == cfg_.latent_dim,
          "generator: latent batch must be [n," + std::to_string(cfg_.latent_dim) + "], got " +
              shape_str(zv.shape()));
  return net_.forward(g, z, ctx);
}

Tensor Generator::forward_values(const Tensor& z, const FwdCtx& ctx) {
  Tape tape;
  Graph g(tape);
  Var out = forward(g, tape.leaf(z), ctx);
  return tape.value(out);
}

Discriminator::Discriminator(DiscriminatorConfig cfg)
    : cfg_(std::move(cfg)), net_("disc", cfg_.image_shape, cfg_.layers) {
  require(net_.output_shape() == Shape{cfg_.classes},
          "discriminator: layer stack must end in " + std::to_string(cfg_.classes) +
              " class logits, got " + shape_str(net_.output_shape()));
}

Discriminator::Out Discriminator::forward(Graph& g, Var x, const FwdCtx& ctx) {
  const Tensor& xv = g.tape().value(x);
  Shape expect{0};
  expect.insert(expect.end(), cfg_.image_shape.begin(), cfg_.image_shape.end());
  require(xv.rank() == cfg_.image_shape.size() + 1 &&
              std::equal(cfg_.image_shape.begin(), cfg_.image_shape.end(),
                         xv.shape().begin() + 1),
          "discriminator: input " + shape_str(xv.shape()) + " does not match image shape " +
              shape_str(cfg_.image_shape));
  auto tagged = net_.forward_tagged(g, x, ctx, cfg_.feature_tag);
  return {tagged.out, tagged.tagged};
}

LatentBatch sample_latent(std::size_t n, std::size_t d, Rng& rng, double epsilon) {
  require(n >= 1 && d >= 1, "sample_latent: n and d must be >= 1");
  LatentBatch batch;
  batch.z = Tensor({n, d});
  for (auto& v : batch.z.values()) v = rng.uniform(-1.0, 1.0);
  batch.epsilon = epsilon;
  return batch;
}

void draw_perturbations(LatentBatch& batch, Rng& rng) {
  const std::size_t n = batch.count(), d = batch.dim();
  require(n >= 1, "draw_perturbations: empty latent batch");
  batch.delta_bar = Tensor({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rng.gaussian();
      batch.delta_bar[i * d + j] = v;
      norm_sq += v * v;
    }
    require(norm_sq > 0.0, "draw_perturbations: zero direction vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t j = 0; j < d; ++j) batch.delta_bar[i * d + j] *= inv;
  }
}

LatentBatch latent_interpolate(const Tensor& z0, const Tensor& z1, std::size_t steps) {
  require(steps >= 2, "latent_interpolate: steps must be >= 2, got " + std::to_string(steps));
  require(z0.rank() == 1 && same_shape(z0.shape(), z1.shape()),
          "latent_interpolate: endpoints must be equal-length vectors");
  const std::size_t d = z0.size();
  LatentBatch batch;
  batch.z = Tensor({steps, d});
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
    for (std::size_t j = 0; j < d; ++j) {
      batch.z[s * d + j] = z0[j] + t * (z1[j] - z0[j]);
    }
  }
  return batch;
}

}  // namespace mrgan
