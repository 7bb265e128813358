#include "sesdf/nn/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "sesdf/sampling/sampling.hpp"
#include "sesdf/util/binary_io.hpp"
#include "sesdf/util/parallel.hpp"

namespace sesdf {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoSdf: return "no-sdf";
    case Variant::kNoEncoding: return "no-encoding";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "no-sdf") return Variant::kNoSdf;
  if (name == "no-encoding") return Variant::kNoEncoding;
  throw Error("unknown model variant '" + name + "' (full|no-sdf|no-encoding)");
}

namespace {
std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}
}  // namespace

ModelSet::ModelSet(ModelConfig config)
    : pixel_embed(config.image_channels, config.pixel_dim),
      space_embed(config.space_channels, config.space_dim),
      config_(std::move(config)) {
  const int base = config_.pixel_dim + config_.space_dim + code_dim() + 3;
  if (has_sdf()) sdf_net = Mlp(widths(base, config_.sdf_hidden, 4), config_.skip_layer, config_.slope);
  occ_net = Mlp(widths(base + 1, config_.occ_hidden, 1), config_.skip_layer, config_.slope);
}

int ModelSet::code_dim() const {
  return config_.variant == Variant::kNoEncoding ? 1 : distance_code_size(config_.encoding_levels);
}

void ModelSet::encode(double d, double* out) const {
  if (config_.variant == Variant::kNoEncoding) {
    out[0] = d;
  } else {
    distance_encode(d, config_.encoding_levels, out);
  }
}

void ModelSet::encode_derivative(double d, double* out) const {
  out[0] = 1.0;
  if (config_.variant == Variant::kNoEncoding) return;
  double freq = std::numbers::pi;
  for (int l = 0; l <= config_.encoding_levels; ++l, freq *= 2.0) {
    out[1 + 2 * l] = freq * std::cos(freq * d);
    out[2 + 2 * l] = -freq * std::sin(freq * d);
  }
}

InputLayout ModelSet::sdf_layout() const {
  return {{{config_.image_channels, &pixel_embed}, {config_.space_channels, &space_embed}, {code_dim(), nullptr},
           {3, nullptr}}};
}

InputLayout ModelSet::occ_layout() const {
  InputLayout l = sdf_layout();
  l.segments.push_back({1, nullptr});
  return l;
}

void ModelSet::initialize(uint64_t seed) {
  Rng rng(seed);
  pixel_embed.initialize(rng);
  space_embed.initialize(rng);
  if (has_sdf()) sdf_net.initialize(rng);
  occ_net.initialize(rng);
}

std::vector<std::vector<double>*> ModelSet::groups() {
  return {&pixel_embed.weight, &pixel_embed.bias, &space_embed.weight, &space_embed.bias, &sdf_net.params,
          &occ_net.params};
}

std::vector<const std::vector<double>*> ModelSet::groups() const {
  return {&pixel_embed.weight, &pixel_embed.bias, &space_embed.weight, &space_embed.bias, &sdf_net.params,
          &occ_net.params};
}

std::size_t ModelSet::num_params() const {
  std::size_t n = 0;
  for (const auto* g : groups()) n += g->size();
  return n;
}

ModelGrad::ModelGrad(const ModelSet& m)
    : pixel(m.pixel_embed.in, m.pixel_embed.out),
      space(m.space_embed.in, m.space_embed.out),
      sdf(m.sdf_net.params.size(), 0.0),
      occ(m.occ_net.params.size(), 0.0) {}

void ModelGrad::zero() {
  for (auto* g : groups()) std::fill(g->begin(), g->end(), 0.0);
}

std::vector<std::vector<double>*> ModelGrad::groups() {
  return {&pixel.weight, &pixel.bias, &space.weight, &space.bias, &sdf, &occ};
}

void PointBatch::reserve(std::size_t n) {
  image.reserve(n * views * image_channels);
  z.reserve(n * views);
  weight.reserve(n * views);
  space.reserve(n * space_channels);
  body_d.reserve(n);
  body_n.reserve(n);
}

void PointBatch::clear() {
  points = 0;
  image.clear();
  z.clear();
  weight.clear();
  space.clear();
  body_d.clear();
  body_n.clear();
  normal_gt.clear();
  label.clear();
}

namespace {

void check_batch(const ModelSet& m, const PointBatch& b) {
  if (b.points == 0) return;
  if (b.views < 1) throw Error("batch has no views");
  if (b.image_channels != m.config().image_channels || b.space_channels != m.config().space_channels) {
    throw Error("batch channels do not match the model");
  }
  const std::size_t pv = b.points * b.views;
  if (b.image.size() != pv * b.image_channels || b.z.size() != pv || b.space.size() != b.points * b.space_channels ||
      b.body_d.size() != b.points || b.body_n.size() != b.points) {
    throw Error("batch arrays have inconsistent sizes");
  }
}

// Raw f_sd rows for points [p0, p1): one per (point, view).
void sdf_rows(const ModelSet& m, const PointBatch& b, std::size_t p0, std::size_t p1, std::vector<double>& raw) {
  const int ci = b.image_channels, cs = b.space_channels, cd = m.code_dim();
  const int width = ci + cs + cd + 3;
  raw.resize((p1 - p0) * b.views * width);
  double* r = raw.data();
  for (std::size_t p = p0; p < p1; ++p) {
    for (int k = 0; k < b.views; ++k, r += width) {
      const double* img = b.image.data() + (p * b.views + k) * ci;
      std::copy(img, img + ci, r);
      std::copy(b.space.data() + p * cs, b.space.data() + (p + 1) * cs, r + ci);
      m.encode(b.body_d[p], r + ci + cs);
      for (int a = 0; a < 3; ++a) r[ci + cs + cd + a] = b.body_n[p][a];
    }
  }
}

// Fused f_o rows for points [p0, p1). `d`/`n` are the per-(point, view)
// refined outputs relative to p0; ignored when the model has no f_sd.
void occ_rows(const ModelSet& m, const PointBatch& b, std::size_t p0, std::size_t p1, const double* d,
              const Vec3* n, std::vector<double>& raw) {
  const int ci = b.image_channels, cs = b.space_channels, cd = m.code_dim();
  const int width = ci + cs + cd + 4;
  raw.assign((p1 - p0) * width, 0.0);
  std::vector<double> code(cd);
  for (std::size_t p = p0; p < p1; ++p) {
    double* r = raw.data() + (p - p0) * width;
    std::copy(b.space.data() + p * cs, b.space.data() + (p + 1) * cs, r + ci);
    if (!m.has_sdf()) {
      m.encode(b.body_d[p], r + ci + cs);
      for (int a = 0; a < 3; ++a) r[ci + cs + cd + a] = b.body_n[p][a];
    }
    for (int k = 0; k < b.views; ++k) {
      const std::size_t pk = p * b.views + k;
      const double w = b.views == 1 ? 1.0 : b.weight[pk];
      const double* img = b.image.data() + pk * ci;
      for (int c = 0; c < ci; ++c) r[c] += w * img[c];
      r[ci + cs + cd + 3] += w * b.z[pk];
      if (m.has_sdf()) {
        const std::size_t row = (p - p0) * b.views + k;
        m.encode(d[row], code.data());
        for (int c = 0; c < cd; ++c) r[ci + cs + c] += w * code[c];
        for (int a = 0; a < 3; ++a) r[ci + cs + cd + a] += w * n[row][a];
      }
    }
  }
}

constexpr std::size_t kMicroBatch = 512;

}  // namespace

PointPrediction predict(const ModelSet& m, const PointBatch& b, bool occupancy) {
  check_batch(m, b);
  if (occupancy && b.views > 1 && b.weight.size() != b.points * b.views) throw Error("batch lacks fusion weights");
  PointPrediction out;
  out.occupancy.resize(occupancy ? b.points : 0);
  out.fused_d.resize(b.points);
  out.d.resize(b.points * b.views);
  out.n.resize(b.points * b.views);
  // Micro-batches write disjoint slots, so the result is independent of
  // the worker count.
  parallel_for((b.points + kMicroBatch - 1) / kMicroBatch, [&](std::size_t mb) {
    const std::size_t p0 = mb * kMicroBatch;
    const std::size_t p1 = std::min(b.points, p0 + kMicroBatch);
    const std::size_t rows = (p1 - p0) * b.views;
    MlpTape tape;
    std::vector<double> raw;
    if (m.has_sdf()) {
      sdf_rows(m, b, p0, p1, raw);
      mlp_forward(m.sdf_net, m.sdf_layout(), raw.data(), rows, tape);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* o = tape.output.data() + 4 * r;
        out.d[p0 * b.views + r] = o[0];
        out.n[p0 * b.views + r] = Vec3(o[1], o[2], o[3]);
      }
    } else {
      for (std::size_t p = p0; p < p1; ++p) {
        for (int k = 0; k < b.views; ++k) {
          out.d[p * b.views + k] = b.body_d[p];
          out.n[p * b.views + k] = b.body_n[p];
        }
      }
    }
    for (std::size_t p = p0; p < p1; ++p) {
      double s = 0.0;
      for (int k = 0; k < b.views; ++k) {
        s += (b.views == 1 ? 1.0 : b.weight[p * b.views + k]) * out.d[p * b.views + k];
      }
      out.fused_d[p] = s;
    }
    if (!occupancy) return;
    occ_rows(m, b, p0, p1, out.d.data() + p0 * b.views, out.n.data() + p0 * b.views, raw);
    mlp_forward(m.occ_net, m.occ_layout(), raw.data(), p1 - p0, tape);
    for (std::size_t p = p0; p < p1; ++p) out.occupancy[p] = sigmoid(tape.output[p - p0]);
  });
  return out;
}

StepResult loss_and_gradient(const ModelSet& m, const PointBatch& surface, const PointBatch& occ,
                             const LossWeights& lw, ModelGrad* grad, std::vector<bool>* kinks) {
  check_batch(m, surface);
  check_batch(m, occ);
  if (surface.normal_gt.size() != surface.points) throw Error("surface batch lacks normals");
  if (occ.label.size() != occ.points) throw Error("occupancy batch lacks labels");
  if (occ.views > 1 && occ.weight.size() != occ.points * occ.views) throw Error("occupancy batch lacks fusion weights");

  StepResult res;
  const bool sdf = m.has_sdf();
  const std::size_t s_rows = sdf ? surface.points * surface.views : 0;
  const std::size_t o_rows = occ.points * occ.views;

  // f_sd over surface rows followed by occupancy rows.
  MlpTape sdf_tape;
  std::vector<double> sdf_raw, tmp;
  if (sdf) {
    sdf_rows(m, surface, 0, surface.points, sdf_raw);
    sdf_rows(m, occ, 0, occ.points, tmp);
    sdf_raw.insert(sdf_raw.end(), tmp.begin(), tmp.end());
    mlp_forward(m.sdf_net, m.sdf_layout(), sdf_raw.data(), s_rows + o_rows, sdf_tape);
  }
  std::vector<double> d(o_rows);
  std::vector<Vec3> n(o_rows);
  if (sdf) {
    for (std::size_t r = 0; r < o_rows; ++r) {
      const double* o = sdf_tape.output.data() + 4 * (s_rows + r);
      d[r] = o[0];
      n[r] = Vec3(o[1], o[2], o[3]);
    }
  }

  std::vector<double> occ_raw;
  occ_rows(m, occ, 0, occ.points, d.data(), n.data(), occ_raw);
  MlpTape occ_tape;
  mlp_forward(m.occ_net, m.occ_layout(), occ_raw.data(), occ.points, occ_tape);

  // Loss values and output adjoints.
  std::vector<double> dlogit(occ.points, 0.0);
  for (std::size_t p = 0; p < occ.points; ++p) {
    double g;
    res.parts.occupancy += bce_logit_term(occ_tape.output[p], occ.label[p], &g);
    dlogit[p] = lw.occupancy * g / static_cast<double>(occ.points);
  }
  if (occ.points) res.parts.occupancy /= static_cast<double>(occ.points);

  std::vector<double> dsdf(sdf ? 4 * (s_rows + o_rows) : 0, 0.0);
  if (sdf) {
    for (std::size_t r = 0; r < s_rows; ++r) {
      const double* o = sdf_tape.output.data() + 4 * r;
      double gd;
      Vec3 gn;
      res.parts.surface += surface_term(o[0], Vec3(o[1], o[2], o[3]), surface.normal_gt[r / surface.views], lw.distance,
                                        lw.normal, &gd, &gn);
      const double scale = lw.surface / static_cast<double>(s_rows);
      dsdf[4 * r] = scale * gd;
      for (int a = 0; a < 3; ++a) dsdf[4 * r + 1 + a] = scale * gn[a];
    }
    if (s_rows) res.parts.surface /= static_cast<double>(s_rows);
    for (std::size_t r = 0; r < o_rows; ++r) {
      Vec3 gn;
      res.parts.eikonal += eikonal_term(n[r], &gn);
      const double scale = lw.eikonal / static_cast<double>(o_rows);
      for (int a = 0; a < 3; ++a) dsdf[4 * (s_rows + r) + 1 + a] = scale * gn[a];
    }
    if (o_rows) res.parts.eikonal /= static_cast<double>(o_rows);
  }
  res.total = total_loss(res.parts, lw);
  if (kinks) {
    kinks->clear();
    if (sdf) *kinks = activation_pattern(m.sdf_net, sdf_tape);
    const auto occ_pattern = activation_pattern(m.occ_net, occ_tape);
    kinks->insert(kinks->end(), occ_pattern.begin(), occ_pattern.end());
    for (std::size_t r = 0; r < s_rows; ++r) kinks->push_back(sdf_tape.output[4 * r] > 0.0);
    for (std::size_t p = 0; p < occ.points; ++p) {
      const double pr = sigmoid(occ_tape.output[p]);
      kinks->push_back(pr < kProbabilityClamp || pr > 1.0 - kProbabilityClamp);
    }
  }
  if (!grad) return res;

  const InputLayout occ_layout = m.occ_layout();
  std::vector<double> docc_raw;
  if (sdf) docc_raw.assign(occ_raw.size(), 0.0);
  mlp_backward(m.occ_net, occ_layout, occ_tape, dlogit.data(), grad->occ.data(), {&grad->pixel, &grad->space},
               sdf ? docc_raw.data() : nullptr);
  if (!sdf) return res;

  // Fused code and normal adjoints back to each view's refined outputs.
  const int ci = occ.image_channels, cs = occ.space_channels, cd = m.code_dim();
  const int width = ci + cs + cd + 4;
  std::vector<double> dcode(cd);
  for (std::size_t p = 0; p < occ.points; ++p) {
    const double* g = docc_raw.data() + p * width;
    for (int k = 0; k < occ.views; ++k) {
      const std::size_t r = p * occ.views + k;
      const double w = occ.views == 1 ? 1.0 : occ.weight[r];
      m.encode_derivative(d[r], dcode.data());
      double gd = 0.0;
      for (int c = 0; c < cd; ++c) gd += g[ci + cs + c] * dcode[c];
      double* o = dsdf.data() + 4 * (s_rows + r);
      o[0] += w * gd;
      for (int a = 0; a < 3; ++a) o[1 + a] += w * g[ci + cs + cd + a];
    }
  }
  mlp_backward(m.sdf_net, m.sdf_layout(), sdf_tape, dsdf.data(), grad->sdf.data(), {&grad->pixel, &grad->space},
               nullptr);
  return res;
}

void save_checkpoint(const ModelSet& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  const ModelConfig& c = m.config();
  binio::write_magic(os, "SESW");
  binio::write<uint32_t>(os, 1);
  binio::write<uint32_t>(os, static_cast<uint32_t>(c.variant));
  binio::write<uint32_t>(os, static_cast<uint32_t>(c.encoding_levels));
  binio::write<int32_t>(os, c.skip_layer);
  binio::write<double>(os, c.slope);
  for (int v : {c.pixel_dim, c.space_dim, c.image_channels, c.space_channels}) binio::write<uint32_t>(os, v);
  for (const std::vector<int>* hidden : {&c.sdf_hidden, &c.occ_hidden}) {
    binio::write<uint32_t>(os, static_cast<uint32_t>(hidden->size()));
    for (int w : *hidden) binio::write<uint32_t>(os, static_cast<uint32_t>(w));
  }
  const auto groups = m.groups();
  binio::write<uint32_t>(os, static_cast<uint32_t>(groups.size()));
  for (const auto* g : groups) {
    binio::write<uint64_t>(os, g->size());
    for (double v : *g) binio::write<double>(os, v);
  }
  if (!os) throw Error("write failed: " + path.string());
}

ModelSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  binio::expect_magic(is, "SESW");
  if (binio::read<uint32_t>(is) != 1) throw Error("SESW: unsupported version");
  ModelConfig c;
  const uint32_t variant = binio::read<uint32_t>(is);
  if (variant > 2) throw Error("SESW: bad variant");
  c.variant = static_cast<Variant>(variant);
  c.encoding_levels = static_cast<int>(binio::read<uint32_t>(is));
  c.skip_layer = binio::read<int32_t>(is);
  c.slope = binio::read<double>(is);
  c.pixel_dim = static_cast<int>(binio::read<uint32_t>(is));
  c.space_dim = static_cast<int>(binio::read<uint32_t>(is));
  c.image_channels = static_cast<int>(binio::read<uint32_t>(is));
  c.space_channels = static_cast<int>(binio::read<uint32_t>(is));
  for (std::vector<int>* hidden : {&c.sdf_hidden, &c.occ_hidden}) {
    const uint32_t layers = binio::read<uint32_t>(is);
    if (layers > 64) throw Error("SESW: implausible layer count");
    hidden->resize(layers);
    for (int& w : *hidden) w = static_cast<int>(binio::read<uint32_t>(is));
  }
  ModelSet m(c);
  auto groups = m.groups();
  if (binio::read<uint32_t>(is) != groups.size()) throw Error("SESW: tensor count mismatch");
  for (auto* g : groups) {
    if (binio::read<uint64_t>(is) != g->size()) throw Error("SESW: tensor size does not match the architecture");
    for (double& v : *g) v = binio::read<double>(is);
  }
  return m;
}

}  // namespace sesdf
