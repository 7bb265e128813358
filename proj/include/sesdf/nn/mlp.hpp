#pragma once

#include <vector>

#include "sesdf/common.hpp"
#include "sesdf/features/embedding.hpp"
#include "sesdf/util/rng.hpp"

namespace sesdf {

// One block of the network's logical input. An embedded block is produced
// from `raw_size` raw values by an affine embedding (logical size embed->out);
// a direct block passes raw values through unchanged.
struct InputSegment {
  int raw_size = 0;
  const AffineEmbedding* embed = nullptr;
  int logical_size() const { return embed ? embed->out : raw_size; }
};

struct InputLayout {
  std::vector<InputSegment> segments;
  int raw_dim() const;
  int logical_dim() const;
};

// Dense feed-forward network. Hidden layers use a leaky rectifier; the last
// layer is linear. The logical input is concatenated to the input of
// `skip_layer` (0-based; -1 disables the skip).
//
// Layers that consume the logical input never materialize it: the affine
// embeddings are folded into an effective weight over the raw input once per
// batch, which is exact by linearity and makes a 400-wide logical input cost
// only its raw width per row.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths, int skip_layer = 2, double slope = 0.01);

  const std::vector<int>& widths() const { return widths_; }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int skip_layer() const { return skip_; }
  double slope() const { return slope_; }
  // Columns of layer l's weight: previous width, plus the input at the skip.
  int layer_input(int l) const;
  std::size_t weight_offset(int l) const { return offsets_[l]; }
  std::size_t bias_offset(int l) const { return offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * layer_input(l); }
  std::size_t num_params() const { return offsets_.empty() ? 0 : offsets_.back(); }

  // Uniform(+-sqrt(6/fan_in)) weights, zero biases.
  void initialize(Rng& rng);
  void zero_final_layer();

  std::vector<double> params;

 private:
  std::vector<int> widths_;
  int skip_ = -1;
  double slope_ = 0.01;
  std::vector<std::size_t> offsets_;
};

// Everything backward needs from one forward pass.
struct MlpTape {
  std::size_t rows = 0;
  std::vector<std::vector<double>> inputs;   // per layer, rows x (hidden part + raw part)
  std::vector<std::vector<double>> pre;      // per layer, rows x out (before activation)
  std::vector<std::vector<double>> weight;   // per layer effective weight for folded layers
  std::vector<std::vector<double>> bias;     // per layer effective bias for folded layers
  std::vector<double> output;                // rows x output_dim
};

// raw: rows x layout.raw_dim(). Throws on dimension mismatch.
void mlp_forward(const Mlp& net, const InputLayout& layout, const double* raw, std::size_t rows, MlpTape& tape);

// Gradients of L given dL/doutput (rows x output_dim). Accumulates into
// dparams (size num_params), into embedding gradients (one per embedded
// segment, in segment order, same shape as the embedding; entries may be
// null) and, when non-null, into draw (rows x raw_dim).
void mlp_backward(const Mlp& net, const InputLayout& layout, const MlpTape& tape, const double* doutput,
                  double* dparams, const std::vector<AffineEmbedding*>& dembed, double* draw);

// Activation pattern of a tape (one bit per hidden unit and row); used by
// the gradient checker to skip coordinates whose finite difference crosses
// a kink of the rectifier.
std::vector<bool> activation_pattern(const Mlp& net, const MlpTape& tape);

}  // namespace sesdf
