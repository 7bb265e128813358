#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sesdf/nn/adam.hpp"
#include "sesdf/nn/dataset.hpp"

namespace sesdf {

struct TrainConfig {
  int epochs = 12;
  double learning_rate = 1e-4;
  double decay = 0.1;       // multiplies the rate every decay_every epochs
  int decay_every = 4;
  LossWeights loss;
  std::size_t batch_size = 256;  // points per batch, for each of G_s and G_o
  uint64_t seed = 1;
  bool random_view_subsets = true;  // otherwise every batch uses all views
  std::filesystem::path dump_dir = ".";  // where a non-finite batch is written

  double rate_at(int epoch) const;
  void validate() const;
};

struct EpochLoss {
  int epoch = 0;
  LossParts parts;
  double total = 0.0;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

// Adam over every parameter group. Batches are drawn from all scenes and
// visited in a seeded global order; each batch uses a random non-empty
// subset of the scene's views. A non-finite loss writes the offending batch
// to dump_dir and throws.
std::vector<EpochLoss> train(ModelSet& model, const std::vector<SceneSamples>& data, const TrainConfig& config,
                             const EpochCallback& on_epoch = {});

// epoch,L_s,L_o,L_r,total
void write_loss_csv(const std::vector<EpochLoss>& curve, const std::filesystem::path& path);

// Text dump of a batch (one line per point), used on training aborts.
void dump_batch(const PointBatch& batch, const std::filesystem::path& path);

}  // namespace sesdf
