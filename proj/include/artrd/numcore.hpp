#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "artrd/common.hpp"

namespace artrd::numcore {

// ---------------------------------------------------------------------------
// Flat parameter vector for one fully-connected network plus, for policy
// networks, a state-independent log standard deviation per action dimension.
//
// Canonical weight order: layer-major; within a layer the (in+1) x out matrix
// is row-major with the bias row last, so layer l occupies
// (layer_dims[l]+1)*layer_dims[l+1] consecutive values.

struct ParamSet {
  std::vector<int> layer_dims;
  std::vector<double> weights;
  std::vector<double> log_std;  // empty for value networks

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int act_dim() const { return static_cast<int>(log_std.size()); }
  /// Total trainable parameters (weights followed by log_std in gradient layout).
  std::size_t param_count() const { return weights.size() + log_std.size(); }
};

std::size_t weight_count(std::span<const int> layer_dims);

/// Fresh network with scaled-uniform weights (gain 1 on hidden layers,
/// output_gain on the final layer), zero biases, zero log_std.
ParamSet make_mlp(std::vector<int> layer_dims, int act_dim, double output_gain, Rng& rng);

/// All-zero network of the given shape (identity-free; useful as a null policy).
ParamSet make_zero_mlp(std::vector<int> layer_dims, int act_dim);

// Reusable activation storage so the hot loops do not allocate.
struct MlpScratch {
  std::vector<double> acts;
  std::vector<double> delta_a;
  std::vector<double> delta_b;
};

/// Forward pass: tanh on hidden layers, identity output.
void mlp_forward(const ParamSet& p, std::span<const double> input, std::span<double> out,
                 MlpScratch& scratch);
std::vector<double> mlp_forward(const ParamSet& p, std::span<const double> input);

/// Accumulate d(upstream . output)/d(weights) into weight_grad (same flat
/// canonical order as ParamSet::weights). Runs its own forward pass.
void backprop_accumulate(const ParamSet& p, std::span<const double> input,
                         std::span<const double> upstream, std::span<double> weight_grad,
                         MlpScratch& scratch);
std::vector<double> backprop(const ParamSet& p, std::span<const double> input,
                             std::span<const double> upstream);

// ---------------------------------------------------------------------------
// Diagonal Gaussian action head.

struct GaussianAction {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> sample;
  double log_prob = 0.0;
};

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);

/// sample = mean + exp(log_std) * noise, with the analytic log density filled in.
GaussianAction gaussian_from_noise(std::span<const double> mean, std::span<const double> log_std,
                                   std::span<const double> noise);

GaussianAction gaussian_sample(std::span<const double> mean, std::span<const double> log_std,
                               Rng& rng);

/// Entropy of the diagonal Gaussian (depends on log_std only).
double gaussian_entropy(std::span<const double> log_std);

// ---------------------------------------------------------------------------
// Adam.

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update over [weights..., log_std...]. grad must have
/// p.param_count() entries in that layout.
void adam_step(ParamSet& p, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoint format: "ARTRD1" magic, u32 dim count, u32 dims, u32 act_dim,
// then weights and log_std as little-endian 64-bit floats. Round trips are
// bit-exact.

void save_checkpoint(const std::filesystem::path& path, const ParamSet& p);
ParamSet load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const ParamSet& p);
ParamSet parse_checkpoint(const std::string& bytes);

}  // namespace artrd::numcore
