#include "sesdf/nn/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "sesdf/simd/dense.hpp"

namespace sesdf {

int InputLayout::raw_dim() const {
  int n = 0;
  for (const InputSegment& s : segments) n += s.raw_size;
  return n;
}

int InputLayout::logical_dim() const {
  int n = 0;
  for (const InputSegment& s : segments) n += s.logical_size();
  return n;
}

Mlp::Mlp(std::vector<int> widths, int skip_layer, double slope)
    : widths_(std::move(widths)), skip_(skip_layer), slope_(slope) {
  if (widths_.size() < 2) throw Error("Mlp: need at least an input and an output width");
  for (int w : widths_) {
    if (w <= 0) throw Error("Mlp: widths must be positive");
  }
  if (skip_ == 0 || skip_ >= num_layers()) skip_ = -1;
  offsets_.assign(1, 0);
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(offsets_.back() + static_cast<std::size_t>(widths_[l + 1]) * (layer_input(l) + 1));
  }
  params.assign(offsets_.back(), 0.0);
}

int Mlp::layer_input(int l) const { return widths_[l] + (l == skip_ ? widths_[0] : 0); }

void Mlp::initialize(Rng& rng) {
  for (int l = 0; l < num_layers(); ++l) {
    const int in = layer_input(l), out = widths_[l + 1];
    const double a = std::sqrt(6.0 / in);
    double* w = params.data() + weight_offset(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) w[k] = uniform(rng, -a, a);
    std::fill(params.begin() + bias_offset(l), params.begin() + bias_offset(l) + out, 0.0);
  }
}

void Mlp::zero_final_layer() {
  const int l = num_layers() - 1;
  std::fill(params.begin() + weight_offset(l), params.begin() + offsets_[l + 1], 0.0);
}

namespace {

bool folded(const Mlp& net, int l) { return l == 0 || l == net.skip_layer(); }

// Hidden columns that precede the logical input in layer l's weight.
int hidden_columns(const Mlp& net, int l) { return l == 0 ? 0 : net.widths()[l]; }

void fold_weights(const Mlp& net, const InputLayout& layout, int l, std::vector<double>& weff,
                  std::vector<double>& beff) {
  const int out = net.widths()[l + 1], in = net.layer_input(l);
  const int hid = hidden_columns(net, l), raw = layout.raw_dim();
  const int eff_in = hid + raw;
  const double* w = net.params.data() + net.weight_offset(l);
  const double* b = net.params.data() + net.bias_offset(l);
  weff.assign(static_cast<std::size_t>(out) * eff_in, 0.0);
  beff.assign(b, b + out);
  for (int o = 0; o < out; ++o) {
    const double* wrow = w + static_cast<std::size_t>(o) * in;
    double* erow = weff.data() + static_cast<std::size_t>(o) * eff_in;
    std::copy(wrow, wrow + hid, erow);
    int lo = hid, ro = hid;
    for (const InputSegment& s : layout.segments) {
      if (s.embed) {
        const AffineEmbedding& e = *s.embed;
        for (int k = 0; k < e.out; ++k) {
          const double wk = wrow[lo + k];
          if (wk == 0.0) continue;
          const double* erow_k = e.weight.data() + static_cast<std::size_t>(k) * e.in;
          for (int c = 0; c < e.in; ++c) erow[ro + c] += wk * erow_k[c];
          beff[o] += wk * e.bias[k];
        }
      } else {
        std::copy(wrow + lo, wrow + lo + s.raw_size, erow + ro);
      }
      lo += s.logical_size();
      ro += s.raw_size;
    }
  }
}

}  // namespace

void mlp_forward(const Mlp& net, const InputLayout& layout, const double* raw, std::size_t rows, MlpTape& tape) {
  if (layout.logical_dim() != net.input_dim()) throw Error("mlp_forward: input layout does not match the network");
  const int L = net.num_layers();
  const int raw_dim = layout.raw_dim();
  tape.rows = rows;
  tape.inputs.resize(L);
  tape.pre.resize(L);
  tape.weight.resize(L);
  tape.bias.resize(L);

  std::vector<double> h;  // activated output of the previous layer
  for (int l = 0; l < L; ++l) {
    const int out = net.widths()[l + 1];
    std::vector<double>& in = tape.inputs[l];
    const double* w;
    const double* b;
    int in_dim;
    if (folded(net, l)) {
      fold_weights(net, layout, l, tape.weight[l], tape.bias[l]);
      const int hid = hidden_columns(net, l);
      in_dim = hid + raw_dim;
      in.resize(rows * in_dim);
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy(h.data() + r * hid, h.data() + (r + 1) * hid, in.data() + r * in_dim);
        std::copy(raw + r * raw_dim, raw + (r + 1) * raw_dim, in.data() + r * in_dim + hid);
      }
      w = tape.weight[l].data();
      b = tape.bias[l].data();
    } else {
      tape.weight[l].clear();
      tape.bias[l].clear();
      in_dim = net.layer_input(l);
      in = h;
      w = net.params.data() + net.weight_offset(l);
      b = net.params.data() + net.bias_offset(l);
    }
    std::vector<double>& pre = tape.pre[l];
    pre.resize(rows * out);
    simd::dense_forward(in.data(), rows, in_dim, w, b, out, pre.data());
    h = pre;
    if (l + 1 < L) {
      for (double& v : h) v = v > 0.0 ? v : net.slope() * v;
    }
  }
  tape.output = std::move(h);
}

void mlp_backward(const Mlp& net, const InputLayout& layout, const MlpTape& tape, const double* doutput,
                  double* dparams, const std::vector<AffineEmbedding*>& dembed, double* draw) {
  const int L = net.num_layers();
  const std::size_t rows = tape.rows;
  const int raw_dim = layout.raw_dim();
  std::vector<double> g(doutput, doutput + rows * net.output_dim());
  std::vector<double> din, dweff, db;

  for (int l = L - 1; l >= 0; --l) {
    const int out = net.widths()[l + 1];
    if (l + 1 < L) {
      const std::vector<double>& pre = tape.pre[l];
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (pre[k] <= 0.0) g[k] *= net.slope();
      }
    }
    double* dw = dparams + net.weight_offset(l);
    double* dbias = dparams + net.bias_offset(l);
    db.assign(out, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (int o = 0; o < out; ++o) db[o] += g[r * out + o];
    }
    for (int o = 0; o < out; ++o) dbias[o] += db[o];

    if (!folded(net, l)) {
      const int in = net.layer_input(l);
      simd::dense_backward_params(g.data(), rows, out, tape.inputs[l].data(), in, dw, nullptr);
      din.resize(rows * in);
      simd::dense_backward_input(g.data(), rows, out, net.params.data() + net.weight_offset(l), in, din.data());
      g.swap(din);
      continue;
    }

    const int hid = hidden_columns(net, l);
    const int eff_in = hid + raw_dim;
    const int in = net.layer_input(l);
    dweff.assign(static_cast<std::size_t>(out) * eff_in, 0.0);
    simd::dense_backward_params(g.data(), rows, out, tape.inputs[l].data(), eff_in, dweff.data(), nullptr);
    din.resize(rows * eff_in);
    simd::dense_backward_input(g.data(), rows, out, tape.weight[l].data(), eff_in, din.data());

    // Unfold: Weff = [W_h, W_seg E_seg or W_seg], beff = b + sum W_seg b_seg.
    const double* w = net.params.data() + net.weight_offset(l);
    for (int o = 0; o < out; ++o) {
      const double* grow = dweff.data() + static_cast<std::size_t>(o) * eff_in;
      double* dwrow = dw + static_cast<std::size_t>(o) * in;
      for (int k = 0; k < hid; ++k) dwrow[k] += grow[k];
      int lo = hid, ro = hid;
      for (std::size_t s = 0; s < layout.segments.size(); ++s) {
        const InputSegment& seg = layout.segments[s];
        if (seg.embed) {
          const AffineEmbedding& e = *seg.embed;
          AffineEmbedding* de = s < dembed.size() ? dembed[s] : nullptr;
          const double* wrow = w + static_cast<std::size_t>(o) * in + lo;
          for (int k = 0; k < e.out; ++k) {
            const double* erow = e.weight.data() + static_cast<std::size_t>(k) * e.in;
            double acc = db[o] * e.bias[k];
            for (int c = 0; c < e.in; ++c) acc += grow[ro + c] * erow[c];
            dwrow[lo + k] += acc;
            if (de) {
              double* derow = de->weight.data() + static_cast<std::size_t>(k) * e.in;
              for (int c = 0; c < e.in; ++c) derow[c] += wrow[k] * grow[ro + c];
              de->bias[k] += wrow[k] * db[o];
            }
          }
        } else {
          for (int k = 0; k < seg.raw_size; ++k) dwrow[lo + k] += grow[ro + k];
        }
        lo += seg.logical_size();
        ro += seg.raw_size;
      }
    }
    if (draw) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (int c = 0; c < raw_dim; ++c) draw[r * raw_dim + c] += din[r * eff_in + hid + c];
      }
    }
    if (l == 0) break;
    g.resize(rows * hid);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(din.data() + r * eff_in, din.data() + r * eff_in + hid, g.data() + r * hid);
    }
  }
}

std::vector<bool> activation_pattern(const Mlp& net, const MlpTape& tape) {
  std::vector<bool> bits;
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    for (double v : tape.pre[l]) bits.push_back(v > 0.0);
  }
  return bits;
}

}  // namespace sesdf
