#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sesdf/features/feature_image.hpp"
#include "sesdf/nn/losses.hpp"
#include "sesdf/nn/mlp.hpp"

namespace sesdf {

// kNoSdf bypasses the refinement network (the body distance and normal go
// straight to the occupancy network); kNoEncoding feeds raw distances
// instead of their sinusoidal encoding to both networks.
enum class Variant { kFull, kNoSdf, kNoEncoding };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ModelConfig {
  std::vector<int> sdf_hidden{512, 256, 128};
  std::vector<int> occ_hidden{512, 256, 128};
  int skip_layer = 2;
  double slope = 0.01;
  int pixel_dim = 256;
  int space_dim = 128;
  int image_channels = kImageChannels;
  int space_channels = 22;
  int encoding_levels = 5;
  Variant variant = Variant::kFull;
};

// Refinement network f_sd: (F_2D, F_3D, code(d'), n') -> (d, n).
// Occupancy network f_o: (F_2D, F_3D, code(d), n, Z) -> logit.
// Both share the pixel and space embeddings.
class ModelSet {
 public:
  explicit ModelSet(ModelConfig config = {});

  const ModelConfig& config() const { return config_; }
  bool has_sdf() const { return config_.variant != Variant::kNoSdf; }
  int code_dim() const;
  void encode(double d, double* out) const;
  // d code / d d, one entry per code component.
  void encode_derivative(double d, double* out) const;

  InputLayout sdf_layout() const;
  InputLayout occ_layout() const;

  void initialize(uint64_t seed);

  // Flat parameter groups in a fixed order: pixel W, pixel b, space W,
  // space b, f_sd, f_o. f_sd is empty for kNoSdf.
  std::vector<std::vector<double>*> groups();
  std::vector<const std::vector<double>*> groups() const;
  std::size_t num_params() const;

  AffineEmbedding pixel_embed;
  AffineEmbedding space_embed;
  Mlp sdf_net;
  Mlp occ_net;

 private:
  ModelConfig config_;
};

// Same shapes as a ModelSet's parameters.
struct ModelGrad {
  explicit ModelGrad(const ModelSet& m);
  void zero();
  std::vector<std::vector<double>*> groups();
  AffineEmbedding pixel;
  AffineEmbedding space;
  std::vector<double> sdf;
  std::vector<double> occ;
};

// Points with `views` views each. Per-view arrays are point-major
// (index p * views + k).
struct PointBatch {
  int views = 0;
  int image_channels = kImageChannels;
  int space_channels = 22;
  std::size_t points = 0;
  std::vector<double> image;    // points * views * image_channels
  std::vector<double> z;        // points * views
  std::vector<double> weight;   // points * views, normalized per point
  std::vector<double> space;    // points * space_channels
  std::vector<double> body_d;   // points
  std::vector<Vec3> body_n;     // points
  std::vector<Vec3> normal_gt;  // surface supervision (may be empty)
  std::vector<uint8_t> label;   // occupancy supervision (may be empty)

  void reserve(std::size_t n);
  void clear();
};

struct PointPrediction {
  std::vector<double> occupancy;  // per point
  std::vector<double> fused_d;    // per point: weighted refined distance
  std::vector<double> d;          // per point and view
  std::vector<Vec3> n;            // per point and view
};

// Inference in micro-batches (bounded memory for any batch size).
PointPrediction predict(const ModelSet& model, const PointBatch& batch, bool occupancy = true);

struct StepResult {
  LossParts parts;
  double total = 0.0;
};

// Loss on a surface batch (normal_gt set) and an occupancy batch (label and
// weight set); accumulates the gradient when `grad` is non-null. `kinks`,
// when non-null, receives every branch the loss took (rectifier signs,
// sign of d, BCE clamping) so callers can detect non-smooth points.
StepResult loss_and_gradient(const ModelSet& model, const PointBatch& surface, const PointBatch& occupancy,
                             const LossWeights& weights, ModelGrad* grad, std::vector<bool>* kinks = nullptr);

// "SESW": u32 version, u32 variant, u32 encoding levels, u32 skip layer,
// f64 slope, u32 pixel/space dims, u32 image/space channels, u32 layer
// count + widths per network, then u32 tensor count and per tensor u64
// length + f64 values.
void save_checkpoint(const ModelSet& model, const std::filesystem::path& path);
ModelSet load_checkpoint(const std::filesystem::path& path);

}  // namespace sesdf
