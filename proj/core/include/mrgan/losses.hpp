#pragma once

#include <vector>

#include "mrgan/model.hpp"
#include "mrgan/tape.hpp"

namespace mrgan {

// Unit direction in latent space plus the finite-difference step.
struct Perturbation {
  Tensor delta_bar;       // unit vector, length d
  double epsilon = 1e-5;  // step size
};

// What the penalty differences: raw class logits, softmax probabilities over
// the K+1 classes, or log-probabilities.
enum class PenaltyTarget { Logits, Probabilities, LogProbabilities };

PenaltyTarget penalty_target_from_string(const std::string& s);
const char* penalty_target_name(PenaltyTarget t);

struct LossBreakdown {
  double supervised = 0.0;
  double unsup_real = 0.0;
  double unsup_fake = 0.0;
  double manifold_penalty = 0.0;  // pre-lambda
  double lambda = 0.0;
  double total = 0.0;  // supervised + unsup_real + unsup_fake + lambda*penalty
};

// delta / ||delta||_2; throws on the zero vector.
Tensor normalize_perturbation(const Tensor& delta);

// Mean over the batch of -log softmax_K(logits)[label]; softmax over the K
// real classes only (conditioned on the example not being fake).
Var supervised_loss(Tape& t, Var logits, const std::vector<std::size_t>& labels);

// The two unsupervised GAN terms with the fake logit pinned at 0, computed
// entirely through logsumexp:
//   real: -mean[ lse(l) - lse(l ++ {0}) ]     (-log[1 - p(fake|x)])
//   fake:  mean[ lse(l ++ {0}) ]              (-log p(fake|g(z)))
struct UnsupervisedLoss {
  Var real_term;
  Var fake_term;
};
UnsupervisedLoss unsupervised_loss(Tape& t, Var logits_real, Var logits_fake);

// || mean_rows(h_real) - mean_rows(h_fake) ||_1
Var feature_matching_loss(Tape& t, Var h_real, Var h_fake);

// Applies the configured penalty head to raw K-class logits.
Var penalty_head(Tape& t, Var logits, PenaltyTarget target);

// (1/n) sum_i || f0_i - f1_i ||^2 over rows of two [n,F] outputs.
Var penalty_from_pair(Tape& t, Var f0, Var f1);

// Per-row squared differences, for standard-error estimates.
Tensor penalty_per_sample(const Tensor& f0, const Tensor& f1);

// Softmax probabilities over the K+1 classes (fake logit pinned at 0) given
// raw K logits; row sums are 1 up to rounding.
Tensor class_probabilities(const Tensor& logits);

// ---- full discriminator objective -----------------------------------------

struct DiscriminatorBatch {
  Tensor labeled_x;
  std::vector<std::size_t> labels;
  Tensor unlabeled_x;
  Tensor generated_x;  // g(z), fixed input during the discriminator update
  // Penalty pair g(z_pen) and g(z_pen + eps*delta_bar); empty when lambda == 0
  // and the penalty is skipped entirely (baseline mode).
  Tensor penalty_x0;
  Tensor penalty_x1;
};

struct DiscriminatorLossGraph {
  Var supervised;
  Var unsup_real;
  Var unsup_fake;
  Var penalty;  // invalid when the penalty was skipped
  Var total;
  LossBreakdown values;
};

// Assembles supervised + unsupervised + lambda * penalty on one tape. The
// generator outputs enter as constants, so gradients reach only the
// discriminator. ctx_main covers the labeled/unlabeled/generated passes;
// ctx_penalty covers the two penalty passes (its own rng stream).
DiscriminatorLossGraph discriminator_loss(Graph& g, Discriminator& disc,
                                          const DiscriminatorBatch& batch, double lambda,
                                          PenaltyTarget target, const FwdCtx& ctx_main,
                                          const FwdCtx& ctx_penalty);

}  // namespace mrgan
