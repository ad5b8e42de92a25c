#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "triplane/image.hpp"
#include "triplane/nn/unet.hpp"

namespace triplane::nn {

// Non-owning view of one (noisy, clean) training pair.
struct TrainSample {
  const Image* input = nullptr;
  const Image* target = nullptr;
};

struct TrainConfig {
  AdamConfig adam;             // lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8
  uint32_t batch = 4;
  uint32_t epochs = 50;        // absolute epoch count to reach
  uint32_t start_epoch = 0;    // > 0 when resuming from a checkpoint
  uint64_t shuffle_seed = 0;
  uint32_t checkpoint_every = 0;             // epochs between saves; 0 = never
  std::filesystem::path checkpoint_path;     // required if checkpoint_every > 0
  std::string axis_tag;                      // recorded in checkpoint meta
  std::vector<double> prior_loss;            // history preceding start_epoch (resume)
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean MSE per completed epoch, in run order
};

using EpochCallback = std::function<void(uint32_t epoch, double mean_loss)>;

// Runs epochs [start_epoch, epochs) of minibatch Adam on MSE. Each epoch
// shuffles with a seed derived from (shuffle_seed, epoch), so a resumed run
// retraces the uninterrupted one exactly. Throws NumericError on non-finite
// loss, leaving the last written checkpoint in place.
TrainResult train(UNet<float>& model, std::span<const TrainSample> data, const TrainConfig& tc,
                  const EpochCallback& on_epoch = {});

}  // namespace triplane::nn
