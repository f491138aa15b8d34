#ifndef DROPBN_CORE_HPP_
#define DROPBN_CORE_HPP_

#include <Eigen/Dense>
#include <vector>

#include "dropbn/errors.hpp"
#include "dropbn/rng.hpp"
#include "dropbn/tape.hpp"

namespace dropbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-dimension drop logits p' with p_i = sigmoid(p'_i), plus the Concrete
// relaxation temperature.
struct DropParams {
  Vector logits;
  double temperature = 0.1;

  int dim() const { return static_cast<int>(logits.size()); }
};

enum class MaskMode { kHard, kRelaxed };

struct MaskBatch {
  Matrix values;  // n x d; hard: {0,1}, relaxed: (0,1)
  MaskMode mode = MaskMode::kHard;
};

struct CompressedBatch {
  Matrix values;  // scale * mask .* input
  MaskBatch mask;
  double scale = 1.0;
};

struct EntropyEstimate {
  Vector entropies;  // nats, one per dimension
  int bin_count = 32;
  Vector lo;  // observed per-dimension minima (first bin edge)
  Vector hi;  // observed per-dimension maxima (last bin edge)

  int dim() const { return static_cast<int>(entropies.size()); }
  // Materializes the bin_count+1 equal-width edges of dimension i.
  Vector bin_edges(int i) const;
};

Vector drop_probabilities(const DropParams& params);

DropParams init_drop_params(int dim, double logit_lo, double logit_hi,
                            Rng& rng, double temperature = 0.1);

// b = d / (d - sum(p)). Throws kDegenerateDrop when sum(p) >= d - 1e-6*d.
double scale_factor(const Vector& p);

MaskBatch sample_mask_hard(const DropParams& params, int n, Rng& rng);
MaskBatch sample_mask_concrete(const DropParams& params, int n, Rng& rng);

CompressedBatch compress_stochastic(const Matrix& x, const DropParams& params,
                                    MaskMode mode, Rng& rng);

// Keeps exactly the dimensions with p_i < 0.5, rescaled by
// d / #kept. Pure function of (x, params).
CompressedBatch compress_deterministic(const Matrix& x,
                                       const DropParams& params);

Matrix deterministic_keep_mask(const Vector& p);  // 1 x d of {0,1}
int deterministic_kept_count(const Vector& p);

EntropyEstimate estimate_entropy_binning(const Matrix& x, int bin_count = 32);

// sum_i H_i * (1 - p_i)
double compression_term(const Vector& entropies, const Vector& p);
double compression_term(const EntropyEstimate& h, const DropParams& params);

// ---- tape twins used by the training objectives ----

// Relaxed keep mask sigma((logit(1-p) + logit(u)) / lambda) as a
// differentiable function of the drop logits; logit(1-p_i) = -p'_i.
// `u` holds pre-drawn Uniform(0,1) noise, one entry per mask element.
ad::Var relaxed_keep_mask_var(ad::Tape& tape, ad::Var logits, const Matrix& u,
                              double temperature);

// Scale node b = d / (d - sum(sigmoid(logits))). With detach_scale the
// current value is baked in as a constant.
ad::Var db_scale_var(ad::Tape& tape, ad::Var logits, bool detach_scale);

// z = b * mask .* x for an n x d activation node.
ad::Var compress_relaxed_var(ad::Tape& tape, ad::Var x, ad::Var logits,
                             const Matrix& u, double temperature,
                             bool detach_scale);

ad::Var compression_term_var(ad::Tape& tape, ad::Var logits,
                             const Vector& entropies);

// Uniform(0,1) noise matrix for relaxed masks.
Matrix draw_uniform(int rows, int cols, Rng& rng);

}  // namespace dropbn

#endif  // DROPBN_CORE_HPP_
