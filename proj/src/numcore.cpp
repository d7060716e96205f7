#include "artrd/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace artrd::numcore {

namespace {

std::size_t total_units(std::span<const int> dims) {
  std::size_t n = 0;
  for (int d : dims) n += static_cast<std::size_t>(d);
  return n;
}

int max_width(std::span<const int> dims) {
  return *std::max_element(dims.begin(), dims.end());
}

void check_shape(const ParamSet& p) {
  if (p.layer_dims.size() < 2) throw ContractError("network needs at least one layer");
  for (int d : p.layer_dims)
    if (d <= 0) throw ContractError("non-positive layer width");
  if (p.weights.size() != weight_count(p.layer_dims))
    throw ContractError("weight vector does not match layer dims");
}

}  // namespace

std::size_t weight_count(std::span<const int> layer_dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
    n += static_cast<std::size_t>(layer_dims[l] + 1) * static_cast<std::size_t>(layer_dims[l + 1]);
  return n;
}

ParamSet make_mlp(std::vector<int> layer_dims, int act_dim, double output_gain, Rng& rng) {
  ParamSet p;
  p.layer_dims = std::move(layer_dims);
  p.weights.assign(weight_count(p.layer_dims), 0.0);
  p.log_std.assign(static_cast<std::size_t>(act_dim), 0.0);
  check_shape(p);

  std::size_t ofs = 0;
  for (int l = 0; l < p.num_layers(); ++l) {
    const int in = p.layer_dims[l];
    const int out = p.layer_dims[l + 1];
    const double gain = (l == p.num_layers() - 1) ? output_gain : 1.0;
    const double limit = gain * std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j)
        p.weights[ofs + static_cast<std::size_t>(i) * out + j] = rng.uniform(-limit, limit);
    // bias row stays zero
    ofs += static_cast<std::size_t>(in + 1) * out;
  }
  return p;
}

ParamSet make_zero_mlp(std::vector<int> layer_dims, int act_dim) {
  ParamSet p;
  p.layer_dims = std::move(layer_dims);
  p.weights.assign(weight_count(p.layer_dims), 0.0);
  p.log_std.assign(static_cast<std::size_t>(act_dim), 0.0);
  check_shape(p);
  return p;
}

void mlp_forward(const ParamSet& p, std::span<const double> input, std::span<double> out,
                 MlpScratch& scratch) {
  if (static_cast<int>(input.size()) != p.input_dim())
    throw ContractError("forward: input size mismatch");
  if (static_cast<int>(out.size()) != p.output_dim())
    throw ContractError("forward: output size mismatch");

  scratch.acts.resize(total_units(p.layer_dims));
  double* acts = scratch.acts.data();
  std::copy(input.begin(), input.end(), acts);

  std::size_t w_ofs = 0;
  std::size_t a_ofs = 0;
  for (int l = 0; l < p.num_layers(); ++l) {
    const int in = p.layer_dims[l];
    const int n_out = p.layer_dims[l + 1];
    const double* x = acts + a_ofs;
    double* y = acts + a_ofs + in;
    const double* w = p.weights.data() + w_ofs;
    const double* bias = w + static_cast<std::size_t>(in) * n_out;
    for (int j = 0; j < n_out; ++j) y[j] = bias[j];
    for (int i = 0; i < in; ++i) {
      const double xi = x[i];
      const double* row = w + static_cast<std::size_t>(i) * n_out;
      for (int j = 0; j < n_out; ++j) y[j] += xi * row[j];
    }
    if (l != p.num_layers() - 1)
      for (int j = 0; j < n_out; ++j) y[j] = std::tanh(y[j]);
    w_ofs += static_cast<std::size_t>(in + 1) * n_out;
    a_ofs += in;
  }
  const double* final_act = acts + a_ofs;
  std::copy(final_act, final_act + p.output_dim(), out.begin());
}

std::vector<double> mlp_forward(const ParamSet& p, std::span<const double> input) {
  MlpScratch scratch;
  std::vector<double> out(static_cast<std::size_t>(p.output_dim()));
  mlp_forward(p, input, out, scratch);
  return out;
}

void backprop_accumulate(const ParamSet& p, std::span<const double> input,
                         std::span<const double> upstream, std::span<double> weight_grad,
                         MlpScratch& scratch) {
  if (static_cast<int>(upstream.size()) != p.output_dim())
    throw ContractError("backprop: upstream size mismatch");
  if (weight_grad.size() != p.weights.size())
    throw ContractError("backprop: gradient size mismatch");

  // Forward, keeping every activation.
  std::vector<double> probe(static_cast<std::size_t>(p.output_dim()));
  mlp_forward(p, input, probe, scratch);

  scratch.delta_a.resize(static_cast<std::size_t>(max_width(p.layer_dims)));
  scratch.delta_b.resize(static_cast<std::size_t>(max_width(p.layer_dims)));
  double* delta = scratch.delta_a.data();
  double* delta_prev = scratch.delta_b.data();
  std::copy(upstream.begin(), upstream.end(), delta);

  std::size_t w_end = p.weights.size();
  std::size_t a_end = scratch.acts.size() - static_cast<std::size_t>(p.output_dim());
  for (int l = p.num_layers() - 1; l >= 0; --l) {
    const int in = p.layer_dims[l];
    const int n_out = p.layer_dims[l + 1];
    const std::size_t w_ofs = w_end - static_cast<std::size_t>(in + 1) * n_out;
    const std::size_t a_ofs = a_end - static_cast<std::size_t>(in);
    const double* x = scratch.acts.data() + a_ofs;
    const double* w = p.weights.data() + w_ofs;
    double* gw = weight_grad.data() + w_ofs;
    double* gb = gw + static_cast<std::size_t>(in) * n_out;

    for (int j = 0; j < n_out; ++j) gb[j] += delta[j];
    for (int i = 0; i < in; ++i) {
      const double xi = x[i];
      double* grow = gw + static_cast<std::size_t>(i) * n_out;
      const double* wrow = w + static_cast<std::size_t>(i) * n_out;
      double acc = 0.0;
      for (int j = 0; j < n_out; ++j) {
        grow[j] += xi * delta[j];
        acc += wrow[j] * delta[j];
      }
      delta_prev[i] = acc;
    }
    if (l > 0) {
      // tanh' = 1 - a^2 on the layer we are descending into
      for (int i = 0; i < in; ++i) delta_prev[i] *= 1.0 - x[i] * x[i];
    }
    std::swap(delta, delta_prev);
    w_end = w_ofs;
    a_end = a_ofs;
  }
}

std::vector<double> backprop(const ParamSet& p, std::span<const double> input,
                             std::span<const double> upstream) {
  MlpScratch scratch;
  std::vector<double> grad(p.weights.size(), 0.0);
  backprop_accumulate(p, input, upstream, grad, scratch);
  return grad;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  const std::size_t d = mean.size();
  if (log_std.size() != d || action.size() != d)
    throw ContractError("gaussian_log_prob: dimension mismatch");
  double lp = -0.5 * static_cast<double>(d) * std::log(2.0 * kPi);
  for (std::size_t i = 0; i < d; ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp -= log_std[i] + 0.5 * z * z;
  }
  return lp;
}

GaussianAction gaussian_from_noise(std::span<const double> mean, std::span<const double> log_std,
                                   std::span<const double> noise) {
  const std::size_t d = mean.size();
  if (log_std.size() != d || noise.size() != d)
    throw ContractError("gaussian_from_noise: dimension mismatch");
  GaussianAction a;
  a.mean.assign(mean.begin(), mean.end());
  a.std.resize(d);
  a.sample.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    a.std[i] = std::exp(log_std[i]);
    a.sample[i] = mean[i] + a.std[i] * noise[i];
  }
  a.log_prob = gaussian_log_prob(mean, log_std, a.sample);
  return a;
}

GaussianAction gaussian_sample(std::span<const double> mean, std::span<const double> log_std,
                               Rng& rng) {
  std::vector<double> noise(mean.size());
  for (double& n : noise) n = rng.normal();
  return gaussian_from_noise(mean, log_std, noise);
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.5 * static_cast<double>(log_std.size()) * std::log(2.0 * kPi * std::exp(1.0));
  for (double ls : log_std) h += ls;
  return h;
}

void adam_step(ParamSet& p, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg) {
  const std::size_t n = p.param_count();
  if (grad.size() != n) throw ContractError("adam_step: gradient size mismatch");
  if (state.first_moment.size() != n) throw ContractError("adam_step: state size mismatch");

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
  const std::size_t nw = p.weights.size();
  for (std::size_t i = 0; i < n; ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    const double delta = -cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    if (i < nw)
      p.weights[i] += delta;
    else
      p.log_std[i - nw] += delta;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kMagic[6] = {'A', 'R', 'T', 'R', 'D', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

}  // namespace

std::string serialize_checkpoint(const ParamSet& p) {
  check_shape(p);
  std::string out;
  out.reserve(32 + 8 * p.param_count());
  out.append(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(p.layer_dims.size()));
  for (int d : p.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(p.log_std.size()));
  for (double w : p.weights) put_f64(out, w);
  for (double ls : p.log_std) put_f64(out, ls);
  return out;
}

ParamSet parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("bad checkpoint magic");
  Reader r{bytes, sizeof kMagic};

  const std::uint32_t ndims = r.u32();
  if (ndims < 2 || ndims > 64) throw CheckpointError("implausible layer count");
  ParamSet p;
  p.layer_dims.resize(ndims);
  for (std::uint32_t i = 0; i < ndims; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0 || d > 1u << 20) throw CheckpointError("implausible layer width");
    p.layer_dims[i] = static_cast<int>(d);
  }
  const std::uint32_t act_dim = r.u32();
  if (act_dim > 1u << 20) throw CheckpointError("implausible action dimension");

  p.weights.resize(weight_count(p.layer_dims));
  for (double& w : p.weights) w = r.f64();
  p.log_std.resize(act_dim);
  for (double& ls : p.log_std) ls = r.f64();
  if (r.pos != bytes.size()) throw CheckpointError("trailing bytes in checkpoint");
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& p) {
  write_file_atomic(path, serialize_checkpoint(p));
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  return parse_checkpoint(bytes);
}

}  // namespace artrd::numcore
