#include "mrgan/oracles.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

Tensor DifferentiableMap::eval(const Tensor& z) const {
  Tape tape;
  Var out = apply(tape, tape.leaf(z));
  return tape.value(out);
}

LinearMap::LinearMap(Tensor a) : a_(std::move(a)) {
  require(a_.rank() == 2, "LinearMap: matrix must be rank-2, got " + shape_str(a_.shape()));
}

Var LinearMap::apply(Tape& t, Var z) const { return t.matmul(z, t.leaf(a_), false, true); }

double LinearMap::frobenius_sq() const {
  double acc = 0.0;
  for (double v : a_.values()) acc += v * v;
  return acc;
}

ComposedMap::ComposedMap(const DifferentiableMap& inner, const DifferentiableMap& outer)
    : inner_(&inner), outer_(&outer) {
  require(inner.output_dim() == outer.input_dim(),
          "ComposedMap: inner output dim " + std::to_string(inner.output_dim()) +
              " != outer input dim " + std::to_string(outer.input_dim()));
}

Var ComposedMap::apply(Tape& t, Var z) const { return outer_->apply(t, inner_->apply(t, z)); }

ModelMap::ModelMap(Generator& gen, Discriminator& disc, PenaltyTarget target)
    : gen_(&gen), disc_(&disc), target_(target) {
  require(gen.config().image_shape == disc.config().image_shape,
          "ModelMap: generator and discriminator image shapes differ");
}

std::size_t ModelMap::output_dim() const {
  const std::size_t k = disc_->config().classes;
  return target_ == PenaltyTarget::Logits ? k : k + 1;
}

Var ModelMap::apply(Tape& t, Var z) const {
  Graph g(t);
  FwdCtx ctx;  // inference: deterministic, no stat updates
  ctx.mode = Mode::Infer;
  ctx.update_stats = false;
  Var x = gen_->forward(g, z, ctx);
  auto out = disc_->forward(g, x, ctx);
  return penalty_head(t, out.logits, target_);
}

Var manifold_penalty_graph(Tape& t, const DifferentiableMap& map, const LatentBatch& batch) {
  require(batch.count() >= 1, "manifold_penalty: empty latent batch");
  require(batch.delta_bar.size() == batch.z.size(),
          "manifold_penalty: perturbations not drawn for this batch");
  require(batch.epsilon > 0.0, "manifold_penalty: epsilon must be positive");
  Tensor z_shifted = batch.z + batch.epsilon * batch.delta_bar;
  Var f0 = map.apply(t, t.leaf(batch.z));
  Var f1 = map.apply(t, t.leaf(z_shifted));
  return penalty_from_pair(t, f0, f1);
}

PenaltyEstimate manifold_penalty_stochastic(const DifferentiableMap& map, const LatentBatch& z,
                                            double eps, Rng& rng) {
  require(z.count() >= 1, "manifold_penalty_stochastic: empty latent batch");
  require(eps > 0.0, "manifold_penalty_stochastic: epsilon must be positive");
  LatentBatch batch = z;
  batch.epsilon = eps;
  draw_perturbations(batch, rng);
  const Tensor f0 = map.eval(batch.z);
  const Tensor f1 = map.eval(batch.z + eps * batch.delta_bar);
  const Tensor per_sample = penalty_per_sample(f0, f1);
  PenaltyEstimate est;
  est.n = per_sample.size();
  double acc = 0.0;
  for (double v : per_sample.values()) acc += v;
  est.mean = acc / static_cast<double>(est.n);
  if (est.n >= 2) {
    double ss = 0.0;
    for (double v : per_sample.values()) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(est.n - 1)) /
                    std::sqrt(static_cast<double>(est.n));
  }
  return est;
}

double jacobian_frobenius_fd(const DifferentiableMap& map, const Tensor& z, double step) {
  require(step > 0.0, "jacobian_frobenius_fd: step must be positive");
  require(z.rank() == 1 && z.size() == map.input_dim(),
          "jacobian_frobenius_fd: z must be a vector of length " +
              std::to_string(map.input_dim()));
  const std::size_t d = z.size();
  Tensor probe({1, d});
  for (std::size_t j = 0; j < d; ++j) probe[j] = z[j];
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double saved = probe[j];
    probe[j] = saved + step;
    const Tensor fp = map.eval(probe);
    probe[j] = saved - step;
    const Tensor fm = map.eval(probe);
    probe[j] = saved;
    for (std::size_t r = 0; r < fp.size(); ++r) {
      const double col = (fp[r] - fm[r]) / (2.0 * step);
      acc += col * col;
    }
  }
  return acc;
}

double jacobian_frobenius_reverse(const DifferentiableMap& map, const Tensor& z) {
  require(z.rank() == 1 && z.size() == map.input_dim(),
          "jacobian_frobenius_reverse: z must be a vector of length " +
              std::to_string(map.input_dim()));
  const std::size_t d = z.size();
  Tape tape;
  Var zv = tape.leaf(z.reshaped({1, d}));
  Var out = map.apply(tape, zv);
  const std::size_t m = tape.value(out).size();
  // One scalar head per output coordinate, built before any backward pass.
  std::vector<Var> heads;
  heads.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    heads.push_back(tape.sum_all(tape.take_per_row(out, {j})));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    tape.backward(heads[j]);
    const Tensor& gz = tape.grad(zv);
    for (std::size_t i = 0; i < d; ++i) acc += gz[i] * gz[i];
  }
  return acc;
}

namespace {

McEstimate summarize(const std::vector<double>& samples) {
  McEstimate est;
  est.n = samples.size();
  double acc = 0.0;
  for (double v : samples) acc += v;
  est.mean = acc / static_cast<double>(est.n);
  if (est.n >= 2) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(est.n - 1)) /
                    std::sqrt(static_cast<double>(est.n));
  }
  return est;
}

}  // namespace

McEstimate laplacian_norm_mc(const DifferentiableMap& fg, std::size_t n, Rng& rng) {
  require(n >= 2, "laplacian_norm_mc: need n >= 2 samples");
  const std::size_t d = fg.input_dim();
  std::vector<double> samples;
  samples.reserve(n);
  Tensor z({d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.uniform(-1.0, 1.0);
    samples.push_back(jacobian_frobenius_reverse(fg, z));
  }
  return summarize(samples);
}

McEstimate laplacian_norm_mc(const DifferentiableMap& f, const DifferentiableMap& g,
                             std::size_t n, Rng& rng) {
  ComposedMap fg(g, f);
  return laplacian_norm_mc(fg, n, rng);
}

}  // namespace mrgan
