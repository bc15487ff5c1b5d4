#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrgan/tape.hpp"

namespace mrgan {

enum class LayerKind {
  Dense,
  Conv,
  ConvTranspose,
  Nin,
  BatchNorm,
  Dropout,
  LeakyRelu,
  Relu,
  Tanh,
  GlobalAvgPool,
  Reshape,
};

const char* layer_kind_name(LayerKind kind);

// Declarative description of one layer; profiles are lists of these.
struct LayerSpec {
  LayerKind kind;
  std::size_t units = 0;  // dense units / conv output channels
  std::size_t kernel = 1;
  int stride = 1;
  int pad = 0;
  int out_pad = 0;
  bool weight_norm = false;
  bool has_activation_params = false;
  double dropout_p = 0.0;
  double slope = 0.0;  // leaky relu
  Shape reshape_to;    // Reshape target, without the batch axis
  std::string tag;     // marks special outputs (e.g. the feature layer)

  static LayerSpec dense(std::size_t units, bool wn) {
    LayerSpec s{LayerKind::Dense};
    s.units = units;
    s.weight_norm = wn;
    return s;
  }
  static LayerSpec conv(std::size_t channels, std::size_t kernel, int stride, int pad, bool wn) {
    LayerSpec s{LayerKind::Conv};
    s.units = channels;
    s.kernel = kernel;
    s.stride = stride;
    s.pad = pad;
    s.weight_norm = wn;
    return s;
  }
  static LayerSpec conv_transpose(std::size_t channels, std::size_t kernel, int stride, int pad,
                                  int out_pad, bool wn) {
    LayerSpec s{LayerKind::ConvTranspose};
    s.units = channels;
    s.kernel = kernel;
    s.stride = stride;
    s.pad = pad;
    s.out_pad = out_pad;
    s.weight_norm = wn;
    return s;
  }
  static LayerSpec nin(std::size_t channels) {
    LayerSpec s{LayerKind::Nin};
    s.units = channels;
    s.weight_norm = true;
    return s;
  }
  static LayerSpec batch_norm() { return LayerSpec{LayerKind::BatchNorm}; }
  static LayerSpec dropout(double p) {
    LayerSpec s{LayerKind::Dropout};
    s.dropout_p = p;
    return s;
  }
  static LayerSpec leaky_relu(double slope) {
    LayerSpec s{LayerKind::LeakyRelu};
    s.slope = slope;
    return s;
  }
  static LayerSpec relu() { return LayerSpec{LayerKind::Relu}; }
  static LayerSpec tanh() { return LayerSpec{LayerKind::Tanh}; }
  static LayerSpec global_avg_pool() { return LayerSpec{LayerKind::GlobalAvgPool}; }
  static LayerSpec reshape(Shape to) {
    LayerSpec s{LayerKind::Reshape};
    s.reshape_to = std::move(to);
    return s;
  }
  LayerSpec& with_tag(std::string t) {
    tag = std::move(t);
    return *this;
  }
};

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;  // running statistics are saved but not optimized
};

// Ordered registry of parameters owned by layers. Order is the layer build
// order and is the canonical order for optimizer state and checkpoints.
class ParameterStore {
 public:
  void add(Parameter* p);
  const std::vector<Parameter*>& all() const { return params_; }
  std::vector<Parameter*> trainable() const;
  Parameter* find(const std::string& name) const;
  std::size_t count_values(bool trainable_only) const;

 private:
  std::vector<Parameter*> params_;
};

enum class Mode { Train, Infer };

struct FwdCtx {
  Mode mode = Mode::Infer;
  Rng* rng = nullptr;        // consumed by dropout in train mode
  bool update_stats = true;  // batch-norm running-stat updates in train mode
};

// Binds parameters to tape leaves, one leaf per parameter per tape, so a
// parameter reused by several forward passes accumulates its gradient once.
class Graph {
 public:
  explicit Graph(Tape& tape) : tape_(&tape) {}
  Tape& tape() { return *tape_; }
  Var bind(Parameter& p);
  Var constant(Tensor t) { return tape_->leaf(std::move(t)); }
  bool bound(const Parameter& p) const { return bound_.count(&p) > 0; }
  // Gradient of a bound parameter after backward(); zero tensor if unbound.
  Tensor grad_of(const Parameter& p) const;

 private:
  Tape* tape_;
  std::unordered_map<const Parameter*, Var> bound_;
};

class Layer {
 public:
  Layer(LayerSpec spec, std::string name) : spec_(std::move(spec)), name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual void init(Rng& rng) {}
  virtual Var forward(Graph& g, Var x, const FwdCtx& ctx) = 0;
  virtual void register_params(ParameterStore& store) {}

  const LayerSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  const Shape& output_shape() const { return output_shape_; }  // without batch

 protected:
  LayerSpec spec_;
  std::string name_;
  Shape output_shape_;
};

// Builds a concrete layer for `spec` given the incoming shape (without batch).
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& name,
                                  const Shape& input_shape, double bn_momentum, double bn_eps,
                                  double init_sigma);

// Sequential stack with deterministic per-layer initialization streams.
class Network {
 public:
  Network() = default;
  Network(std::string name, Shape input_shape, const std::vector<LayerSpec>& specs,
          double bn_momentum = 0.9, double bn_eps = 1e-5, double init_sigma = 0.05);

  void init(std::uint64_t seed);
  Var forward(Graph& g, Var x, const FwdCtx& ctx);

  struct Tagged {
    Var out;
    Var tagged;
  };
  // Forward pass that also returns the output of the unique layer whose spec
  // carries `tag`. Throws if the tag resolves to zero or multiple layers.
  Tagged forward_tagged(Graph& g, Var x, const FwdCtx& ctx, const std::string& tag);

  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const;
  const std::string& name() const { return name_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

 private:
  std::string name_;
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  ParameterStore store_;
};

}  // namespace mrgan
