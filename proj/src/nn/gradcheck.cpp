#include "sesdf/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sesdf {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

struct Tensor {
  std::string name;
  std::vector<double>* values;
  std::size_t offset;
  std::size_t size;
  const std::vector<double>* grad;  // same indexing as values
};

std::vector<std::size_t> pick(std::size_t size, std::size_t max, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (max == 0 || max >= size) return idx;
  for (std::size_t i = 0; i < max; ++i) {
    std::swap(idx[i], idx[i + std::uniform_int_distribution<std::size_t>(0, size - i - 1)(rng)]);
  }
  idx.resize(max);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void append_layers(const std::string& prefix, Mlp& net, const std::vector<double>& grad, std::vector<Tensor>& out) {
  for (int l = 0; l < net.num_layers(); ++l) {
    const std::size_t w = net.weight_offset(l), b = net.bias_offset(l);
    const std::size_t end = l + 1 < net.num_layers() ? net.weight_offset(l + 1) : net.num_params();
    out.push_back({prefix + ".W" + std::to_string(l), &net.params, w, b - w, &grad});
    out.push_back({prefix + ".b" + std::to_string(l), &net.params, b, end - b, &grad});
  }
}

// eval(&pattern) returns the objective and fills the branch signature of
// the current parameters; a coordinate whose +-eps signature differs from
// the base one straddles a kink and is skipped.
template <class Eval>
GradCheckReport run(std::vector<Tensor>& tensors, double eps, uint64_t seed, std::size_t max_per_tensor, Eval eval) {
  GradCheckReport rep;
  Rng rng(seed ^ 0x5bd1e995ull);
  std::vector<bool> base, plus, minus;
  eval(&base);
  for (Tensor& t : tensors) {
    for (std::size_t i : pick(t.size, max_per_tensor, rng)) {
      double& v = (*t.values)[t.offset + i];
      const double saved = v;
      v = saved + eps;
      const double fp = eval(&plus);
      v = saved - eps;
      const double fm = eval(&minus);
      v = saved;
      if (plus != base || minus != base) {
        ++rep.skipped_kinks;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = (*t.grad)[t.offset + i];
      const double err = relative_error(analytic, numeric);
      ++rep.checked;
      if (rep.worst_tensor.empty() || err > rep.max_rel_error) {
        rep.max_rel_error = err;
        rep.worst_tensor = t.name;
        rep.worst_index = i;
        rep.worst_analytic = analytic;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace

GradCheckReport gradient_check(const Mlp& net, const std::vector<double>& input, std::size_t rows, double eps,
                               uint64_t seed, std::size_t max_per_tensor) {
  return gradient_check(net, InputLayout{{{net.input_dim(), nullptr}}}, input, rows, eps, seed, max_per_tensor);
}

GradCheckReport gradient_check(const Mlp& net_in, const InputLayout& layout_in, const std::vector<double>& input,
                               std::size_t rows, double eps, uint64_t seed, std::size_t max_per_tensor) {
  if (input.size() != rows * static_cast<std::size_t>(layout_in.raw_dim())) {
    throw Error("gradient_check: input size does not match rows x raw input width");
  }
  Mlp net = net_in;
  // Private copies of the embeddings so they can be perturbed.
  std::vector<AffineEmbedding> embeds;
  embeds.reserve(layout_in.segments.size());
  InputLayout layout = layout_in;
  for (InputSegment& s : layout.segments) {
    if (s.embed) s.embed = &embeds.emplace_back(*s.embed);
  }
  std::vector<AffineEmbedding> dembeds;
  dembeds.reserve(embeds.size());
  std::vector<AffineEmbedding*> dembed_ptrs;
  for (const InputSegment& s : layout.segments) {
    dembed_ptrs.push_back(s.embed ? &dembeds.emplace_back(s.embed->in, s.embed->out) : nullptr);
  }

  Rng rng(seed);
  std::vector<double> r(rows * net.output_dim());
  for (double& x : r) x = uniform(rng, -1.0, 1.0);

  MlpTape tape;
  auto eval = [&](std::vector<bool>* pattern) {
    mlp_forward(net, layout, input.data(), rows, tape);
    if (pattern) *pattern = activation_pattern(net, tape);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * tape.output[i];
    return s;
  };
  eval(nullptr);
  std::vector<double> grad(net.num_params(), 0.0);
  mlp_backward(net, layout, tape, r.data(), grad.data(), dembed_ptrs, nullptr);

  std::vector<Tensor> tensors;
  for (std::size_t e = 0; e < embeds.size(); ++e) {
    const std::string name = "embed" + std::to_string(e);
    tensors.push_back({name + ".W", &embeds[e].weight, 0, embeds[e].weight.size(), &dembeds[e].weight});
    tensors.push_back({name + ".b", &embeds[e].bias, 0, embeds[e].bias.size(), &dembeds[e].bias});
  }
  append_layers("net", net, grad, tensors);
  return run(tensors, eps, seed, max_per_tensor, eval);
}

GradCheckReport gradient_check(const ModelSet& model_in, const PointBatch& surface, const PointBatch& occupancy,
                               const LossWeights& weights, double eps, uint64_t seed, std::size_t max_per_tensor) {
  ModelSet model = model_in;
  ModelGrad grad(model);
  loss_and_gradient(model, surface, occupancy, weights, &grad);

  std::vector<Tensor> tensors{
      {"pixel.W", &model.pixel_embed.weight, 0, model.pixel_embed.weight.size(), &grad.pixel.weight},
      {"pixel.b", &model.pixel_embed.bias, 0, model.pixel_embed.bias.size(), &grad.pixel.bias},
      {"space.W", &model.space_embed.weight, 0, model.space_embed.weight.size(), &grad.space.weight},
      {"space.b", &model.space_embed.bias, 0, model.space_embed.bias.size(), &grad.space.bias},
  };
  if (model.has_sdf()) append_layers("sdf", model.sdf_net, grad.sdf, tensors);
  append_layers("occ", model.occ_net, grad.occ, tensors);
  auto eval = [&](std::vector<bool>* pattern) {
    return loss_and_gradient(model, surface, occupancy, weights, nullptr, pattern).total;
  };
  return run(tensors, eps, seed, max_per_tensor, eval);
}

void random_check_batches(const ModelSet& model, int views, std::size_t points, uint64_t seed, PointBatch& surface,
                          PointBatch& occupancy) {
  Rng rng(seed);
  const ModelConfig& c = model.config();
  for (PointBatch* b : {&surface, &occupancy}) {
    *b = PointBatch{};
    b->views = views;
    b->image_channels = c.image_channels;
    b->space_channels = c.space_channels;
    b->points = points;
    for (std::size_t i = 0; i < points * views * c.image_channels; ++i) b->image.push_back(uniform(rng, -1.0, 1.0));
    for (std::size_t i = 0; i < points * views; ++i) b->z.push_back(uniform(rng, -1.0, 1.0));
    for (std::size_t p = 0; p < points; ++p) {
      double s = 0.0;
      for (int k = 0; k < views; ++k) s += b->weight.emplace_back(uniform(rng, 0.1, 1.0));
      for (int k = 0; k < views; ++k) b->weight[p * views + k] /= s;
    }
    for (std::size_t i = 0; i < points * c.space_channels; ++i) b->space.push_back(uniform(rng, -1.0, 1.0));
    for (std::size_t p = 0; p < points; ++p) {
      b->body_d.push_back(uniform(rng, -0.2, 0.2));
      Vec3 n(normal(rng), normal(rng), normal(rng));
      b->body_n.push_back(n.normalized());
    }
  }
  for (std::size_t p = 0; p < points; ++p) {
    Vec3 n(normal(rng), normal(rng), normal(rng));
    surface.normal_gt.push_back(n.normalized());
    occupancy.label.push_back(static_cast<uint8_t>(p % 2));
  }
}

}  // namespace sesdf
