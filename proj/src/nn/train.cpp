#include "triplane/nn/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "triplane/errors.hpp"
#include "triplane/nn/checkpoint.hpp"
#include "triplane/nn/ops.hpp"
#include "triplane/rng.hpp"

namespace triplane::nn {

namespace {

// Rebuilds idx from scratch so the permutation depends only on the seed,
// never on the previous epoch's order; a resumed run must retrace exactly.
void shuffle_indices(std::vector<size_t>& idx, uint64_t seed) {
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(seed);
  for (size_t i = idx.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
}

void save_atomically(const UNet<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  save_checkpoint(model, meta, tmp);
  std::filesystem::rename(tmp, path);  // keeps the previous file on a mid-write kill
}

}  // namespace

TrainResult train(UNet<float>& model, std::span<const TrainSample> data, const TrainConfig& tc,
                  const EpochCallback& on_epoch) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (tc.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (!(tc.adam.lr > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(tc.adam.beta1 > 0.0 && tc.adam.beta1 < 1.0 && tc.adam.beta2 > 0.0 &&
        tc.adam.beta2 < 1.0))
    throw std::invalid_argument("train: betas must lie in (0,1)");
  if (tc.start_epoch > tc.epochs)
    throw std::invalid_argument("train: start_epoch exceeds epochs");
  if (tc.checkpoint_every > 0 && tc.checkpoint_path.empty())
    throw std::invalid_argument("train: checkpoint_every set without a checkpoint path");
  for (const auto& s : data)
    if (!s.input || !s.target || !s.input->same_shape(*s.target))
      throw std::invalid_argument("train: samples must pair same-shaped input/target images");

  const UNetConfig& cfg = model.config();
  const bool valid_mode = cfg.padding == Padding::Valid;

  Workspace<float> ws;
  Tensor<float> target, target_crop, loss_grad;
  std::vector<float> grads(model.param_count());
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  if (tc.prior_loss.size() != tc.start_epoch)
    throw std::invalid_argument("train: prior_loss must hold one entry per finished epoch");

  TrainResult result;
  std::vector<double> full_history = tc.prior_loss;
  for (uint32_t epoch = tc.start_epoch; epoch < tc.epochs; ++epoch) {
    shuffle_indices(order, derive_seed(tc.shuffle_seed, epoch));

    double epoch_sq = 0.0;
    size_t epoch_px = 0;
    for (size_t b0 = 0; b0 < order.size(); b0 += tc.batch) {
      const size_t b1 = std::min(order.size(), b0 + tc.batch);

      size_t batch_px = 0;
      for (size_t i = b0; i < b1; ++i) {
        const Image& in = *data[order[i]].input;
        const auto [oh, ow] = output_dims(cfg, in.rows, in.cols);
        batch_px += static_cast<size_t>(oh) * ow;
      }
      const float inv_n = 1.0f / static_cast<float>(batch_px);

      std::fill(grads.begin(), grads.end(), 0.0f);
      double batch_loss = 0.0;
      for (size_t i = b0; i < b1; ++i) {
        const TrainSample& s = data[order[i]];
        model.forward(from_image<float>(*s.input), ws);
        target = from_image<float>(*s.target);
        const Tensor<float>* tgt = &target;
        if (valid_mode && (target.h != ws.out.h || target.w != ws.out.w)) {
          center_crop(target, ws.out.h, ws.out.w, target_crop);
          tgt = &target_crop;
        }
        batch_loss += mse_loss(ws.out, *tgt, inv_n, loss_grad);
        model.backward(ws, loss_grad, grads);
      }
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b0 / tc.batch) +
                           "; last checkpoint left intact");
      model.apply_adam(grads, tc.adam);

      epoch_sq += batch_loss * static_cast<double>(batch_px);
      epoch_px += batch_px;
    }

    const double mean_loss = epoch_sq / static_cast<double>(epoch_px);
    result.epoch_loss.push_back(mean_loss);
    full_history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
    if (tc.checkpoint_every > 0 && (epoch + 1) % tc.checkpoint_every == 0)
      save_atomically(model, {epoch + 1, tc.axis_tag, full_history}, tc.checkpoint_path);
  }
  return result;
}

}  // namespace triplane::nn
