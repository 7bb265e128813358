#include "sesdf/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "sesdf/util/log.hpp"

namespace sesdf {

double TrainConfig::rate_at(int epoch) const {
  return learning_rate * std::pow(decay, decay_every > 0 ? epoch / decay_every : 0);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be >= 0");
  if (!(learning_rate > 0.0) || !(decay > 0.0)) throw Error("learning rates must be positive");
  if (batch_size == 0) throw Error("batch size must be positive");
  for (double w : {loss.surface, loss.occupancy, loss.eikonal, loss.distance, loss.normal}) {
    if (!(w >= 0.0)) throw Error("loss weights must be >= 0");
  }
}

namespace {

struct BatchRef {
  std::size_t scene;
  std::size_t index;
};

std::vector<std::size_t> slice(const std::vector<std::size_t>& order, std::size_t index, std::size_t size) {
  const std::size_t begin = std::min(order.size(), index * size);
  const std::size_t end = std::min(order.size(), begin + size);
  return {order.begin() + begin, order.begin() + end};
}

}  // namespace

std::vector<EpochLoss> train(ModelSet& model, const std::vector<SceneSamples>& data, const TrainConfig& config,
                             const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw Error("train: empty dataset");
  Rng rng(config.seed);

  ModelGrad grad(model);
  auto params = model.groups();
  auto grads = grad.groups();
  std::vector<AdamState> states(params.size());

  std::vector<EpochLoss> curve;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.rate_at(epoch);
    // Fresh point orders per scene, then a global order over all batches.
    std::vector<std::vector<std::size_t>> surf_order(data.size()), occ_order(data.size());
    std::vector<BatchRef> batches;
    for (std::size_t s = 0; s < data.size(); ++s) {
      surf_order[s].resize(data[s].surface.points);
      occ_order[s].resize(data[s].occupancy.points);
      std::iota(surf_order[s].begin(), surf_order[s].end(), 0);
      std::iota(occ_order[s].begin(), occ_order[s].end(), 0);
      std::shuffle(surf_order[s].begin(), surf_order[s].end(), rng);
      std::shuffle(occ_order[s].begin(), occ_order[s].end(), rng);
      const std::size_t n = std::max(data[s].surface.points, data[s].occupancy.points);
      for (std::size_t b = 0; b * config.batch_size < n; ++b) batches.push_back({s, b});
    }
    std::shuffle(batches.begin(), batches.end(), rng);

    EpochLoss sum;
    sum.epoch = epoch;
    for (const BatchRef& ref : batches) {
      const SceneSamples& scene = data[ref.scene];
      const int views = scene.occupancy.views;
      std::vector<int> subset(views);
      std::iota(subset.begin(), subset.end(), 0);
      if (config.random_view_subsets && views > 1) {
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(std::uniform_int_distribution<int>(1, views)(rng));
        std::sort(subset.begin(), subset.end());
      }
      const PointBatch surface =
          select_points(scene.surface, slice(surf_order[ref.scene], ref.index, config.batch_size), subset);
      const PointBatch occupancy =
          select_points(scene.occupancy, slice(occ_order[ref.scene], ref.index, config.batch_size), subset);

      grad.zero();
      const StepResult r = loss_and_gradient(model, surface, occupancy, config.loss, &grad);
      if (!std::isfinite(r.total)) {
        const auto base = config.dump_dir / ("nonfinite_e" + std::to_string(epoch) + "_s" + std::to_string(ref.scene));
        dump_batch(surface, base.string() + "_surface.txt");
        dump_batch(occupancy, base.string() + "_occupancy.txt");
        throw Error("non-finite loss in epoch " + std::to_string(epoch) + ", scene " + std::to_string(ref.scene) +
                    "; batch written to " + base.string() + "_*.txt");
      }
      for (std::size_t g = 0; g < params.size(); ++g) {
        if (!params[g]->empty()) adam_step(*params[g], *grads[g], states[g], lr);
      }
      sum.parts.surface += r.parts.surface;
      sum.parts.occupancy += r.parts.occupancy;
      sum.parts.eikonal += r.parts.eikonal;
      sum.total += r.total;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, batches.size()));
    sum.parts.surface /= n;
    sum.parts.occupancy /= n;
    sum.parts.eikonal /= n;
    sum.total /= n;
    curve.push_back(sum);
    if (on_epoch) on_epoch(sum);
  }
  return curve;
}

void write_loss_csv(const std::vector<EpochLoss>& curve, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "epoch,L_s,L_o,L_r,total\n" << std::setprecision(10);
  for (const EpochLoss& e : curve) {
    os << e.epoch << ',' << e.parts.surface << ',' << e.parts.occupancy << ',' << e.parts.eikonal << ',' << e.total
       << '\n';
  }
}

void dump_batch(const PointBatch& b, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    log::warn("cannot write batch dump " + path.string());
    return;
  }
  os << std::setprecision(17) << "# views " << b.views << " points " << b.points << '\n';
  for (std::size_t p = 0; p < b.points; ++p) {
    os << "d " << b.body_d[p] << " n " << b.body_n[p].transpose();
    if (!b.label.empty()) os << " label " << int(b.label[p]);
    if (!b.normal_gt.empty()) os << " n_gt " << b.normal_gt[p].transpose();
    for (int k = 0; k < b.views; ++k) {
      const std::size_t pk = p * b.views + k;
      os << " | z " << b.z[pk] << " w " << b.weight[pk] << " img";
      for (int c = 0; c < b.image_channels; ++c) os << ' ' << b.image[pk * b.image_channels + c];
    }
    os << " | space";
    for (int c = 0; c < b.space_channels; ++c) os << ' ' << b.space[p * b.space_channels + c];
    os << '\n';
  }
}

}  // namespace sesdf
