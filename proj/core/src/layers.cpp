#include "mrgan/layers.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv: return "conv";
    case LayerKind::ConvTranspose: return "conv_transpose";
    case LayerKind::Nin: return "nin";
    case LayerKind::BatchNorm: return "batch_norm";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::LeakyRelu: return "leaky_relu";
    case LayerKind::Relu: return "relu";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::Reshape: return "reshape";
  }
  return "?";
}

void ParameterStore::add(Parameter* p) { params_.push_back(p); }

std::vector<Parameter*> ParameterStore::trainable() const {
  std::vector<Parameter*> out;
  for (Parameter* p : params_) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

Parameter* ParameterStore::find(const std::string& name) const {
  for (Parameter* p : params_) {
    if (p->name == name) return p;
  }
  return nullptr;
}

std::size_t ParameterStore::count_values(bool trainable_only) const {
  std::size_t n = 0;
  for (const Parameter* p : params_) {
    if (!trainable_only || p->trainable) n += p->value.size();
  }
  return n;
}

Var Graph::bind(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return it->second;
  Var v = tape_->leaf(p.value);
  bound_.emplace(&p, v);
  return v;
}

Tensor Graph::grad_of(const Parameter& p) const {
  auto it = bound_.find(&p);
  if (it == bound_.end()) return Tensor(p.value.shape());
  return tape_->grad(it->second);
}

namespace {

void gaussian_fill(Tensor& t, Rng& rng, double sigma) {
  for (auto& v : t.values()) v = sigma * rng.gaussian();
}

class DenseLayer final : public Layer {
 public:
  DenseLayer(LayerSpec spec, std::string name, const Shape& in, double init_sigma)
      : Layer(std::move(spec), std::move(name)), init_sigma_(init_sigma) {
    require(in.size() == 1, name_ + ": dense layer expects a flat input, got " + shape_str(in));
    fan_in_ = in[0];
    require(spec_.units >= 1, name_ + ": dense layer needs units >= 1");
    output_shape_ = {spec_.units};
    if (spec_.weight_norm) {
      v_ = {name_ + ".v", Tensor({spec_.units, fan_in_})};
      g_ = {name_ + ".g", Tensor({spec_.units})};
    } else {
      v_ = {name_ + ".w", Tensor({spec_.units, fan_in_})};
    }
    b_ = {name_ + ".b", Tensor({spec_.units})};
  }

  void init(Rng& rng) override {
    gaussian_fill(v_.value, rng, init_sigma_);
    if (spec_.weight_norm) g_.value.fill(1.0);
    b_.value.fill(0.0);
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override {
    Tape& t = g.tape();
    Var w = g.bind(v_);
    if (spec_.weight_norm) w = t.weight_norm(w, g.bind(g_));
    Var y = t.matmul(x, w, false, true);  // [n,in] x [out,in]^T
    return t.add(y, g.bind(b_));
  }

  void register_params(ParameterStore& store) override {
    store.add(&v_);
    if (spec_.weight_norm) store.add(&g_);
    store.add(&b_);
  }

 private:
  std::size_t fan_in_ = 0;
  double init_sigma_;
  Parameter v_, g_, b_;
};

class Conv2dLayer final : public Layer {
 public:
  Conv2dLayer(LayerSpec spec, std::string name, const Shape& in, double init_sigma)
      : Layer(std::move(spec), std::move(name)), init_sigma_(init_sigma) {
    require(in.size() == 3, name_ + ": conv layer expects [c,h,w] input, got " + shape_str(in));
    require(spec_.kernel >= 1 && spec_.stride >= 1, name_ + ": kernel/stride must be >= 1");
    in_channels_ = in[0];
    const std::size_t oh = conv_out_extent(in[1], spec_.kernel, spec_.stride, spec_.pad);
    const std::size_t ow = conv_out_extent(in[2], spec_.kernel, spec_.stride, spec_.pad);
    require(oh >= 1 && ow >= 1,
            name_ + ": non-positive output extent for input " + shape_str(in));
    output_shape_ = {spec_.units, oh, ow};
    if (spec_.weight_norm) {
      v_ = {name_ + ".v", Tensor({spec_.units, in_channels_, spec_.kernel, spec_.kernel})};
      g_ = {name_ + ".g", Tensor({spec_.units})};
    } else {
      v_ = {name_ + ".w", Tensor({spec_.units, in_channels_, spec_.kernel, spec_.kernel})};
    }
    b_ = {name_ + ".b", Tensor({spec_.units})};
  }

  void init(Rng& rng) override {
    gaussian_fill(v_.value, rng, init_sigma_);
    if (spec_.weight_norm) g_.value.fill(1.0);
    b_.value.fill(0.0);
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override {
    Tape& t = g.tape();
    Var w = g.bind(v_);
    if (spec_.weight_norm) w = t.weight_norm(w, g.bind(g_));
    Var y = t.conv2d(x, w, spec_.stride, spec_.pad);
    return t.channel_bias(y, g.bind(b_));
  }

  void register_params(ParameterStore& store) override {
    store.add(&v_);
    if (spec_.weight_norm) store.add(&g_);
    store.add(&b_);
  }

 private:
  std::size_t in_channels_ = 0;
  double init_sigma_;
  Parameter v_, g_, b_;
};

class ConvTranspose2dLayer final : public Layer {
 public:
  ConvTranspose2dLayer(LayerSpec spec, std::string name, const Shape& in, double init_sigma)
      : Layer(std::move(spec), std::move(name)), init_sigma_(init_sigma) {
    require(in.size() == 3,
            name_ + ": conv-transpose layer expects [c,h,w] input, got " + shape_str(in));
    in_channels_ = in[0];
    const std::size_t oh =
        conv_transpose_out_extent(in[1], spec_.kernel, spec_.stride, spec_.pad, spec_.out_pad);
    const std::size_t ow =
        conv_transpose_out_extent(in[2], spec_.kernel, spec_.stride, spec_.pad, spec_.out_pad);
    require(oh >= 1 && ow >= 1, name_ + ": non-positive output extent");
    output_shape_ = {spec_.units, oh, ow};
    // Weight stored output-major ([co,ci,k,k]) so weight-norm rows are per
    // output unit; swapped to the op's [ci,co,k,k] layout in forward.
    if (spec_.weight_norm) {
      v_ = {name_ + ".v", Tensor({spec_.units, in_channels_, spec_.kernel, spec_.kernel})};
      g_ = {name_ + ".g", Tensor({spec_.units})};
    } else {
      v_ = {name_ + ".w", Tensor({spec_.units, in_channels_, spec_.kernel, spec_.kernel})};
    }
    b_ = {name_ + ".b", Tensor({spec_.units})};
  }

  void init(Rng& rng) override {
    gaussian_fill(v_.value, rng, init_sigma_);
    if (spec_.weight_norm) g_.value.fill(1.0);
    b_.value.fill(0.0);
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override {
    Tape& t = g.tape();
    Var w = g.bind(v_);
    if (spec_.weight_norm) w = t.weight_norm(w, g.bind(g_));
    Var y = t.conv_transpose2d(x, t.swap_axes01(w), spec_.stride, spec_.pad, spec_.out_pad);
    return t.channel_bias(y, g.bind(b_));
  }

  void register_params(ParameterStore& store) override {
    store.add(&v_);
    if (spec_.weight_norm) store.add(&g_);
    store.add(&b_);
  }

 private:
  std::size_t in_channels_ = 0;
  double init_sigma_;
  Parameter v_, g_, b_;
};

class BatchNormLayer final : public Layer {
 public:
  BatchNormLayer(LayerSpec spec, std::string name, const Shape& in, double momentum, double eps)
      : Layer(std::move(spec), std::move(name)), momentum_(momentum), eps_(eps) {
    require(!in.empty(), name_ + ": batch-norm needs a channel axis");
    channels_ = in[0];
    output_shape_ = in;
    gamma_ = {name_ + ".gamma", Tensor({channels_})};
    beta_ = {name_ + ".beta", Tensor({channels_})};
    running_mean_ = {name_ + ".running_mean", Tensor({channels_}), false};
    running_var_ = {name_ + ".running_var", Tensor({channels_}), false};
  }

  void init(Rng&) override {
    gamma_.value.fill(1.0);
    beta_.value.fill(0.0);
    running_mean_.value.fill(0.0);
    running_var_.value.fill(1.0);
  }

  Var forward(Graph& g, Var x, const FwdCtx& ctx) override {
    Tape& t = g.tape();
    Var gamma = g.bind(gamma_);
    Var beta = g.bind(beta_);
    if (ctx.mode == Mode::Infer) {
      return t.batch_norm_infer(x, gamma, beta, running_mean_.value, running_var_.value, eps_);
    }
    Tensor batch_mean, batch_var;
    Var y = t.batch_norm_train(x, gamma, beta, eps_, &batch_mean, &batch_var);
    if (ctx.update_stats) {
      for (std::size_t c = 0; c < channels_; ++c) {
        running_mean_.value[c] =
            momentum_ * running_mean_.value[c] + (1.0 - momentum_) * batch_mean[c];
        running_var_.value[c] =
            momentum_ * running_var_.value[c] + (1.0 - momentum_) * batch_var[c];
      }
    }
    return y;
  }

  void register_params(ParameterStore& store) override {
    store.add(&gamma_);
    store.add(&beta_);
    store.add(&running_mean_);
    store.add(&running_var_);
  }

 private:
  std::size_t channels_ = 0;
  double momentum_, eps_;
  Parameter gamma_, beta_, running_mean_, running_var_;
};

class DropoutLayer final : public Layer {
 public:
  DropoutLayer(LayerSpec spec, std::string name, const Shape& in)
      : Layer(std::move(spec), std::move(name)) {
    require(spec_.dropout_p >= 0.0 && spec_.dropout_p < 1.0,
            name_ + ": dropout p must lie in [0,1)");
    output_shape_ = in;
  }

  Var forward(Graph& g, Var x, const FwdCtx& ctx) override {
    if (ctx.mode == Mode::Infer || spec_.dropout_p == 0.0) return x;  // exact identity
    require(ctx.rng != nullptr, name_ + ": train-mode dropout needs an rng stream");
    return g.tape().dropout(x, spec_.dropout_p, *ctx.rng);
  }
};

class ActivationLayer final : public Layer {
 public:
  ActivationLayer(LayerSpec spec, std::string name, const Shape& in)
      : Layer(std::move(spec), std::move(name)) {
    output_shape_ = in;
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override {
    Tape& t = g.tape();
    switch (spec_.kind) {
      case LayerKind::LeakyRelu: return t.leaky_relu(x, spec_.slope);
      case LayerKind::Relu: return t.relu(x);
      case LayerKind::Tanh: return t.tanh(x);
      default: throw ContractViolation(name_ + ": not an activation kind");
    }
  }
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  GlobalAvgPoolLayer(LayerSpec spec, std::string name, const Shape& in)
      : Layer(std::move(spec), std::move(name)) {
    require(in.size() == 3, name_ + ": global pool expects [c,h,w], got " + shape_str(in));
    output_shape_ = {in[0]};
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override { return g.tape().global_avg_pool(x); }
};

class ReshapeLayer final : public Layer {
 public:
  ReshapeLayer(LayerSpec spec, std::string name, const Shape& in)
      : Layer(std::move(spec), std::move(name)) {
    require(numel(spec_.reshape_to) == numel(in),
            name_ + ": cannot reshape " + shape_str(in) + " to " + shape_str(spec_.reshape_to));
    output_shape_ = spec_.reshape_to;
  }

  Var forward(Graph& g, Var x, const FwdCtx&) override {
    const std::size_t batch = g.tape().value(x).extent(0);
    Shape target{batch};
    target.insert(target.end(), spec_.reshape_to.begin(), spec_.reshape_to.end());
    return g.tape().reshape(x, std::move(target));
  }
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& name,
                                  const Shape& input_shape, double bn_momentum, double bn_eps,
                                  double init_sigma) {
  switch (spec.kind) {
    case LayerKind::Dense:
      return std::make_unique<DenseLayer>(spec, name, input_shape, init_sigma);
    case LayerKind::Conv:
      return std::make_unique<Conv2dLayer>(spec, name, input_shape, init_sigma);
    case LayerKind::Nin: {
      LayerSpec lowered = spec;
      lowered.kernel = 1;
      lowered.stride = 1;
      lowered.pad = 0;
      return std::make_unique<Conv2dLayer>(lowered, name, input_shape, init_sigma);
    }
    case LayerKind::ConvTranspose:
      return std::make_unique<ConvTranspose2dLayer>(spec, name, input_shape, init_sigma);
    case LayerKind::BatchNorm:
      return std::make_unique<BatchNormLayer>(spec, name, input_shape, bn_momentum, bn_eps);
    case LayerKind::Dropout:
      return std::make_unique<DropoutLayer>(spec, name, input_shape);
    case LayerKind::LeakyRelu:
    case LayerKind::Relu:
    case LayerKind::Tanh:
      return std::make_unique<ActivationLayer>(spec, name, input_shape);
    case LayerKind::GlobalAvgPool:
      return std::make_unique<GlobalAvgPoolLayer>(spec, name, input_shape);
    case LayerKind::Reshape:
      return std::make_unique<ReshapeLayer>(spec, name, input_shape);
  }
  throw ContractViolation("make_layer: unknown layer kind");
}

Network::Network(std::string name, Shape input_shape, const std::vector<LayerSpec>& specs,
                 double bn_momentum, double bn_eps, double init_sigma)
    : name_(std::move(name)), input_shape_(std::move(input_shape)) {
  Shape cur = input_shape_;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::string lname = name_ + "." + (i < 10 ? "0" : "") + std::to_string(i) + "." +
                        layer_kind_name(specs[i].kind);
    layers_.push_back(make_layer(specs[i], lname, cur, bn_momentum, bn_eps, init_sigma));
    layers_.back()->register_params(store_);
    cur = layers_.back()->output_shape();
  }
}

void Network::init(std::uint64_t seed) {
  for (auto& layer : layers_) {
    Rng rng(derive_seed(seed, "init/" + layer->name()));
    layer->init(rng);
  }
}

Var Network::forward(Graph& g, Var x, const FwdCtx& ctx) {
  Var cur = x;
  for (auto& layer : layers_) cur = layer->forward(g, cur, ctx);
  return cur;
}

Network::Tagged Network::forward_tagged(Graph& g, Var x, const FwdCtx& ctx,
                                        const std::string& tag) {
  Var cur = x;
  Var tagged;
  std::size_t hits = 0;
  for (auto& layer : layers_) {
    cur = layer->forward(g, cur, ctx);
    if (layer->spec().tag == tag) {
      tagged = cur;
      ++hits;
    }
  }
  require(hits == 1, name_ + ": tag '" + tag + "' resolves to " + std::to_string(hits) +
                         " layers, expected exactly 1");
  return {cur, tagged};
}

const Shape& Network::output_shape() const {
  require(!layers_.empty(), name_ + ": network has no layers");
  return layers_.back()->output_shape();
}

}  // namespace mrgan
