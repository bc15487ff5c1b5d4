#pragma once

#include <memory>

#include "mrgan/losses.hpp"
#include "mrgan/model.hpp"

namespace mrgan {

// A smooth map R^d -> R^m applied row-wise to batches, traced on a tape so
// it can be differentiated in reverse mode.
class DifferentiableMap {
 public:
  virtual ~DifferentiableMap() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  // z: [n, input_dim] -> [n, output_dim]. May bind fresh parameter leaves on
  // each call.
  virtual Var apply(Tape& t, Var z) const = 0;

  // Value-only evaluation on a scratch tape.
  Tensor eval(const Tensor& z) const;
};

// y = z A^T for a fixed matrix A [m,d].
class LinearMap final : public DifferentiableMap {
 public:
  explicit LinearMap(Tensor a);
  std::size_t input_dim() const override { return a_.extent(1); }
  std::size_t output_dim() const override { return a_.extent(0); }
  Var apply(Tape& t, Var z) const override;
  const Tensor& matrix() const { return a_; }
  double frobenius_sq() const;

 private:
  Tensor a_;
};

// outer(inner(z))
class ComposedMap final : public DifferentiableMap {
 public:
  ComposedMap(const DifferentiableMap& inner, const DifferentiableMap& outer);
  std::size_t input_dim() const override { return inner_->input_dim(); }
  std::size_t output_dim() const override { return outer_->output_dim(); }
  Var apply(Tape& t, Var z) const override;

 private:
  const DifferentiableMap* inner_;
  const DifferentiableMap* outer_;
};

// z -> head(f(g(z))): the discriminator's response to generator outputs,
// evaluated in inference mode (no dropout, frozen statistics).
class ModelMap final : public DifferentiableMap {
 public:
  ModelMap(Generator& gen, Discriminator& disc, PenaltyTarget target = PenaltyTarget::Logits);
  std::size_t input_dim() const override { return gen_->config().latent_dim; }
  std::size_t output_dim() const override;
  Var apply(Tape& t, Var z) const override;

 private:
  Generator* gen_;
  Discriminator* disc_;
  PenaltyTarget target_;
};

// ---- the estimator and its oracles ------------------------------------------

// Builds (1/n) sum_i ||map(z_i) - map(z_i + eps*delta_i)||^2 on the caller's
// tape; differentiable through everything `map` binds.
Var manifold_penalty_graph(Tape& t, const DifferentiableMap& map, const LatentBatch& batch);

struct PenaltyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Draws one fresh unit perturbation per latent row and evaluates the penalty.
// The returned standard error is over the per-sample squared differences.
PenaltyEstimate manifold_penalty_stochastic(const DifferentiableMap& map, const LatentBatch& z,
                                            double eps, Rng& rng);

// ||J||_F^2 at a single point z [d], by central differences over each latent
// coordinate (2d evaluations of the full output).
double jacobian_frobenius_fd(const DifferentiableMap& map, const Tensor& z, double step);

// Same quantity from reverse-mode sweeps, one per output coordinate.
double jacobian_frobenius_reverse(const DifferentiableMap& map, const Tensor& z);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Monte-Carlo average of ||J_z f(g(z))||_F^2 over z ~ U(-1,1)^d, with the
// exact (reverse-mode) Jacobian per sample.
McEstimate laplacian_norm_mc(const DifferentiableMap& f, const DifferentiableMap& g,
                             std::size_t n, Rng& rng);

// Convenience overload for an already-composed map.
McEstimate laplacian_norm_mc(const DifferentiableMap& fg, std::size_t n, Rng& rng);

}  // namespace mrgan
