#include "mrgan/losses.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

PenaltyTarget penalty_target_from_string(const std::string& s) {
  if (s == "logits") return PenaltyTarget::Logits;
  if (s == "probabilities") return PenaltyTarget::Probabilities;
  if (s == "log-probabilities") return PenaltyTarget::LogProbabilities;
  throw ConfigError("unknown penalty target '" + s +
                    "' (expected logits | probabilities | log-probabilities)");
}

const char* penalty_target_name(PenaltyTarget t) {
  switch (t) {
    case PenaltyTarget::Logits: return "logits";
    case PenaltyTarget::Probabilities: return "probabilities";
    case PenaltyTarget::LogProbabilities: return "log-probabilities";
  }
  return "?";
}

Tensor normalize_perturbation(const Tensor& delta) {
  double norm_sq = 0.0;
  for (double v : delta.values()) norm_sq += v * v;
  require(norm_sq > 0.0, "normalize_perturbation: zero vector");
  const double inv = 1.0 / std::sqrt(norm_sq);
  Tensor out(delta.shape());
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] * inv;
  return out;
}

Var supervised_loss(Tape& t, Var logits, const std::vector<std::size_t>& labels) {
  const Tensor& lv = t.value(logits);
  require(lv.rank() == 2, "supervised_loss: logits must be [n,K], got " + shape_str(lv.shape()));
  const std::size_t k = lv.extent(1);
  for (std::size_t y : labels) {
    require(y < k, "supervised_loss: label " + std::to_string(y) + " out of range [0," +
                       std::to_string(k) + ")");
  }
  Var lse = t.logsumexp(logits, 1);           // [n]
  Var picked = t.take_per_row(logits, labels);  // [n]
  return t.mean_all(t.sub(lse, picked));
}

UnsupervisedLoss unsupervised_loss(Tape& t, Var logits_real, Var logits_fake) {
  // real term: -mean[ lse(l) - lse0(l) ]
  Var lse_r = t.logsumexp(logits_real, 1);
  Var lse0_r = t.logsumexp(t.pad_zero_column(logits_real), 1);
  Var real_term = t.scale(t.mean_all(t.sub(lse_r, lse0_r)), -1.0);
  // fake term: mean[ lse0(l) ]
  Var lse0_f = t.logsumexp(t.pad_zero_column(logits_fake), 1);
  Var fake_term = t.mean_all(lse0_f);
  return {real_term, fake_term};
}

Var feature_matching_loss(Tape& t, Var h_real, Var h_fake) {
  const Tensor& rv = t.value(h_real);
  const Tensor& fv = t.value(h_fake);
  require(rv.rank() == 2 && fv.rank() == 2 && rv.extent(1) == fv.extent(1),
          "feature_matching_loss: feature widths differ, " + shape_str(rv.shape()) + " vs " +
              shape_str(fv.shape()));
  Var mean_real = t.mean_axis(h_real, 0);
  Var mean_fake = t.mean_axis(h_fake, 0);
  return t.l1_norm(t.sub(mean_real, mean_fake));
}

Var penalty_head(Tape& t, Var logits, PenaltyTarget target) {
  switch (target) {
    case PenaltyTarget::Logits:
      return logits;
    case PenaltyTarget::LogProbabilities: {
      Var padded = t.pad_zero_column(logits);
      Var lse = t.logsumexp(padded, 1);
      return t.sub_broadcast_last(padded, lse);
    }
    case PenaltyTarget::Probabilities: {
      Var padded = t.pad_zero_column(logits);
      Var lse = t.logsumexp(padded, 1);
      return t.exp(t.sub_broadcast_last(padded, lse));
    }
  }
  throw ContractViolation("penalty_head: unknown target");
}

Var penalty_from_pair(Tape& t, Var f0, Var f1) {
  const Tensor& v0 = t.value(f0);
  require(v0.rank() >= 1 && v0.extent(0) >= 1, "penalty_from_pair: empty sample batch");
  require(same_shape(v0.shape(), t.value(f1).shape()),
          "penalty_from_pair: shape mismatch " + shape_str(v0.shape()) + " vs " +
              shape_str(t.value(f1).shape()));
  return t.mean_all(t.row_sumsq(t.sub(f0, f1)));
}

Tensor penalty_per_sample(const Tensor& f0, const Tensor& f1) {
  require(same_shape(f0.shape(), f1.shape()), "penalty_per_sample: shape mismatch");
  require(f0.rank() >= 1 && f0.extent(0) >= 1, "penalty_per_sample: empty sample batch");
  const std::size_t n = f0.extent(0);
  const std::size_t cols = f0.size() / n;
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = f0[i * cols + c] - f1[i * cols + c];
      acc += d * d;
    }
    out[i] = acc;
  }
  return out;
}

Tensor class_probabilities(const Tensor& logits) {
  require(logits.rank() == 2, "class_probabilities: logits must be [n,K]");
  const std::size_t n = logits.extent(0), k = logits.extent(1);
  Tensor out({n, k + 1});
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;  // fake logit
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, logits.at(i, j));
    double denom = std::exp(0.0 - m);
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(logits.at(i, j) - m);
    for (std::size_t j = 0; j < k; ++j) {
      out[i * (k + 1) + j] = std::exp(logits.at(i, j) - m) / denom;
    }
    out[i * (k + 1) + k] = std::exp(0.0 - m) / denom;
  }
  return out;
}

DiscriminatorLossGraph discriminator_loss(Graph& g, Discriminator& disc,
                                          const DiscriminatorBatch& batch, double lambda,
                                          PenaltyTarget target, const FwdCtx& ctx_main,
                                          const FwdCtx& ctx_penalty) {
  require(lambda >= 0.0, "discriminator_loss: lambda must be >= 0");
  Tape& t = g.tape();

  auto labeled = disc.forward(g, g.constant(batch.labeled_x), ctx_main);
  auto unlabeled = disc.forward(g, g.constant(batch.unlabeled_x), ctx_main);
  auto generated = disc.forward(g, g.constant(batch.generated_x), ctx_main);

  DiscriminatorLossGraph out;
  out.supervised = supervised_loss(t, labeled.logits, batch.labels);
  auto unsup = unsupervised_loss(t, unlabeled.logits, generated.logits);
  out.unsup_real = unsup.real_term;
  out.unsup_fake = unsup.fake_term;

  Var main_sum = t.add(out.supervised, t.add(out.unsup_real, out.unsup_fake));
  const bool with_penalty = batch.penalty_x0.size() > 0;
  if (with_penalty) {
    auto p0 = disc.forward(g, g.constant(batch.penalty_x0), ctx_penalty);
    auto p1 = disc.forward(g, g.constant(batch.penalty_x1), ctx_penalty);
    Var h0 = penalty_head(t, p0.logits, target);
    Var h1 = penalty_head(t, p1.logits, target);
    out.penalty = penalty_from_pair(t, h0, h1);
    out.total = t.add(main_sum, t.scale(out.penalty, lambda));
  } else {
    out.total = main_sum;
  }

  out.values.supervised = t.value(out.supervised).item();
  out.values.unsup_real = t.value(out.unsup_real).item();
  out.values.unsup_fake = t.value(out.unsup_fake).item();
  out.values.manifold_penalty = with_penalty ? t.value(out.penalty).item() : 0.0;
  out.values.lambda = lambda;
  out.values.total = t.value(out.total).item();
  return out;
}

}  // namespace mrgan
