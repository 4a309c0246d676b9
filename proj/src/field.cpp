#include "npnf/field.hpp"

#include <cmath>

namespace npnf {

namespace {

struct LayerDims {
  int fan_in, fan_out;
};

// Flat layout: trunk layers, sigma head, color hidden, color out.
std::vector<LayerDims> layer_dims(const FieldConfig& c) {
  std::vector<LayerDims> dims;
  dims.push_back({c.enc_x_dim(), c.hidden_width});
  for (int l = 1; l < c.hidden_layers; ++l)
    dims.push_back({c.hidden_width, c.hidden_width});
  dims.push_back({c.hidden_width, 1});
  dims.push_back({c.hidden_width + c.enc_d_dim(), c.hidden_width});
  dims.push_back({c.hidden_width, 3});
  return dims;
}

}  // namespace

size_t FieldConfig::param_count() const {
  size_t n = 0;
  for (auto [fi, fo] : layer_dims(*this)) n += size_t(fi + 1) * fo;
  return n;
}

std::vector<double> positional_encode(const Vec3& v, int freqs) {
  std::vector<double> out;
  out.reserve(3 + 6 * size_t(freqs));
  out.insert(out.end(), {v.x, v.y, v.z});
  double scale = M_PI;
  for (int l = 0; l < freqs; ++l) {
    out.insert(out.end(), {std::sin(scale * v.x), std::sin(scale * v.y),
                           std::sin(scale * v.z)});
    out.insert(out.end(), {std::cos(scale * v.x), std::cos(scale * v.y),
                           std::cos(scale * v.z)});
    scale *= 2.0;
  }
  return out;
}

FieldParams init_field(const FieldConfig& config, uint64_t seed) {
  FieldParams theta;
  theta.config = config;
  theta.values.assign(config.param_count(), 0.0);
  Rng rng(seed);
  size_t off = 0;
  for (auto [fi, fo] : layer_dims(config)) {
    double lim = std::sqrt(6.0 / double(fi + fo));
    for (int i = 0; i < fi * fo; ++i) theta.values[off + i] = rng.uniform(-lim, lim);
    off += size_t(fi) * fo;
    off += fo;  // biases stay zero
  }
  return theta;
}

FieldSample eval_field(const FieldParams& theta, const Vec3& x, const Vec3& d) {
  const FieldConfig& c = theta.config;
  const double* p = theta.values.data();
  size_t off = 0;

  auto linear = [&](const std::vector<double>& in, int fan_out,
                    bool act) -> std::vector<double> {
    int fan_in = int(in.size());
    std::vector<double> out(fan_out);
    for (int j = 0; j < fan_out; ++j) {
      const double* w = p + off + size_t(j) * fan_in;
      double s = 0.0;
      for (int i = 0; i < fan_in; ++i) s += w[i] * in[i];
      out[j] = s;
    }
    off += size_t(fan_in) * fan_out;
    for (int j = 0; j < fan_out; ++j) out[j] += p[off + j];
    off += fan_out;
    if (act)
      for (double& v : out) v = Tape::softplus_val(v);
    return out;
  };

  std::vector<double> h = positional_encode(x, c.freqs_x);
  for (int l = 0; l < c.hidden_layers; ++l) h = linear(h, c.hidden_width, true);
  double sigma_raw = linear(h, 1, false)[0];

  std::vector<double> cin = h;
  std::vector<double> ed = positional_encode(d, c.freqs_d);
  cin.insert(cin.end(), ed.begin(), ed.end());
  std::vector<double> ch = linear(cin, c.hidden_width, true);
  std::vector<double> rgb = linear(ch, 3, false);

  FieldSample s;
  s.sigma = Tape::softplus_val(sigma_raw);
  s.color = {Tape::sigmoid_val(rgb[0]), Tape::sigmoid_val(rgb[1]),
             Tape::sigmoid_val(rgb[2])};
  return s;
}

namespace {

// Encoded vector as one contiguous node block; scaled inputs are emitted
// first so the copy/sin/cos block stays contiguous.
uint32_t encode_block(Tape& tape, const Vec3T<Var>& v, int freqs,
                      uint32_t prefix_start, int prefix_len) {
  std::vector<Var> scaled;
  scaled.reserve(3 * size_t(freqs));
  double scale = M_PI;
  for (int l = 0; l < freqs; ++l) {
    scaled.push_back(tape.mul_c(v.x, scale));
    scaled.push_back(tape.mul_c(v.y, scale));
    scaled.push_back(tape.mul_c(v.z, scale));
    scale *= 2.0;
  }
  uint32_t start = 0;
  for (int k = 0; k < prefix_len; ++k) {
    Var c = tape.copy(Var{&tape, prefix_start + uint32_t(k)});
    if (k == 0) start = c.idx;
  }
  Var c0 = tape.copy(v.x);
  if (prefix_len == 0) start = c0.idx;
  tape.copy(v.y);
  tape.copy(v.z);
  for (int l = 0; l < freqs; ++l) {
    tape.sin(scaled[3 * l + 0]);
    tape.sin(scaled[3 * l + 1]);
    tape.sin(scaled[3 * l + 2]);
    tape.cos(scaled[3 * l + 0]);
    tape.cos(scaled[3 * l + 1]);
    tape.cos(scaled[3 * l + 2]);
  }
  return start;
}

// Dense layer over a contiguous input block. Returns start of the output
// block (post-activation when act is set). Advances the weight offset.
uint32_t layer_block(Tape& tape, uint32_t in_start, int fan_in, int fan_out,
                     uint32_t theta_base, size_t& off, bool act) {
  uint32_t w0 = theta_base + uint32_t(off);
  uint32_t dot0 = 0;
  for (int j = 0; j < fan_out; ++j) {
    Var d = tape.dot(in_start, w0 + uint32_t(j * fan_in), uint32_t(fan_in));
    if (j == 0) dot0 = d.idx;
  }
  off += size_t(fan_in) * fan_out;
  uint32_t b0 = theta_base + uint32_t(off);
  uint32_t add0 = 0;
  for (int j = 0; j < fan_out; ++j) {
    Var a = tape.add(Var{&tape, dot0 + uint32_t(j)}, Var{&tape, b0 + uint32_t(j)});
    if (j == 0) add0 = a.idx;
  }
  off += size_t(fan_out);
  if (!act) return add0;
  uint32_t act0 = 0;
  for (int j = 0; j < fan_out; ++j) {
    Var s = tape.softplus(Var{&tape, add0 + uint32_t(j)});
    if (j == 0) act0 = s.idx;
  }
  return act0;
}

}  // namespace

FieldSampleVar eval_field_var(Tape& tape, const FieldConfig& c,
                              uint32_t theta_base, const Vec3T<Var>& x,
                              const Vec3T<Var>& d) {
  size_t off = 0;
  uint32_t h = encode_block(tape, x, c.freqs_x, 0, 0);
  int hlen = c.enc_x_dim();
  for (int l = 0; l < c.hidden_layers; ++l) {
    h = layer_block(tape, h, hlen, c.hidden_width, theta_base, off, true);
    hlen = c.hidden_width;
  }
  uint32_t sigma_raw =
      layer_block(tape, h, hlen, 1, theta_base, off, false);

  // color input = [trunk activations | gamma(d)] gathered contiguously
  uint32_t cin = encode_block(tape, d, c.freqs_d, h, hlen);
  int cin_len = hlen + c.enc_d_dim();
  uint32_t ch = layer_block(tape, cin, cin_len, c.hidden_width, theta_base,
                            off, true);
  uint32_t rgb = layer_block(tape, ch, c.hidden_width, 3, theta_base, off,
                             false);

  FieldSampleVar out;
  out.sigma = softplus(Var{&tape, sigma_raw});
  out.color = {sigmoid(Var{&tape, rgb + 0}), sigmoid(Var{&tape, rgb + 1}),
               sigmoid(Var{&tape, rgb + 2})};
  return out;
}

}  // namespace npnf
