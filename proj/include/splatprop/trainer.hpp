#pragma once

#include "splatprop/densify.hpp"
#include "splatprop/losses.hpp"
#include "splatprop/scene_io.hpp"

#include <filesystem>
#include <iosfwd>

namespace splatprop {

/// Thrown when the loss goes non-finite; the CLI maps it to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int iterations = 2000;  // 30000 at full scale
  uint64_t seed = 0;
  int threads = 1;

  // Per-group learning rates. The position rate decays exponentially from
  // init to final over the run and is scaled by the scene extent.
  double position_lr_init = 1.6e-4;
  double position_lr_final = 1.6e-6;
  bool scale_position_lr_by_extent = true;
  double color_lr = 2.5e-3;
  double opacity_lr = 5e-2;
  double scale_lr = 5e-3;
  double rotation_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  LossWeights weights;

  int densify_interval = 100;
  int densify_from = 500;
  int densify_until = 15000;
  DensifyConfig densify;

  bool enable_propagation = true;
  bool enable_planar_loss = true;
  int propagation_interval = 50;  // m
  int propagation_from = 500;
  int propagation_until = 15000;
  double sigma = 0.8;  // growth threshold on |filtered - rendered| / filtered
  PropagationConfig propagation;
  GeometricFilterConfig filter;
  SpawnConfig spawn;

  int holdout_every = 8;  // every 8th view is held out
  int eval_interval = 500;
  int checkpoint_interval = 1000;
  bool normal_loss_mean = true;
  size_t max_gaussians = 200000;
  bool debug_dumps = false;

  void validate() const;
};

/// Parses overrides on top of the defaults. Unknown keys are an error.
TrainConfig parse_train_config(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& cfg);

struct TrainReport {
  double psnr = 0.0;  // mean over held-out views (training views if none)
  double ssim = 0.0;
  size_t gaussian_count = 0;
  double wall_seconds = 0.0;
  std::vector<double> iteration_loss;  // total loss per iteration
};

/// Runs the optimization loop. metrics_log (may be null) receives one JSON
/// line per iteration plus held-out evaluations; its content is bit-identical
/// across runs with the same seed and thread count. out_dir (may be empty)
/// receives checkpoints, the final cloud, and debug dumps.
TrainReport train(const Scene& scene, GaussianCloud cloud, const TrainConfig& cfg,
                  std::ostream* metrics_log = nullptr,
                  const std::filesystem::path& out_dir = {});

}  // namespace splatprop
