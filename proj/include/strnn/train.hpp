#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "strnn/dataset.hpp"
#include "strnn/mlp.hpp"
#include "strnn/optim.hpp"

namespace strnn {

enum class LrSchedule { Fixed, Plateau };

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 200;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 50;
  std::uint64_t seed = 0;
  double eps = 1e-8;
  LrSchedule lr_schedule = LrSchedule::Fixed;
  double plateau_factor = 0.1;  // applied when the training loss stalls for plateau_patience epochs
  std::size_t plateau_patience = 10;

  void validate() const {
    if (!(learning_rate >= 0) || !(weight_decay >= 0) || !(eps > 0)) {
      throw Error(ErrorCode::InvalidArgument, "learning_rate, weight_decay must be >= 0 and eps > 0");
    }
    if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (early_stop_patience == 0) throw Error(ErrorCode::InvalidArgument, "early_stop_patience must be >= 1");
    if (lr_schedule == LrSchedule::Plateau &&
        (!(plateau_factor > 0 && plateau_factor < 1) || plateau_patience == 0)) {
      throw Error(ErrorCode::InvalidArgument, "plateau schedule needs 0 < factor < 1 and patience >= 1");
    }
  }

  AdamWConfig adamw() const { return {0.9, 0.999, eps, weight_decay}; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0;
  double val_nll = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 means the initial parameters were kept
  double best_val_nll = std::numeric_limits<double>::infinity();
};

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& h) {
  os.precision(17);
  os << "epoch,train_nll,val_nll,lr\n";
  for (const auto& r : h) os << r.epoch << ',' << r.train_nll << ',' << r.val_nll << ',' << r.lr << '\n';
}

/// Mini-batch loop shared by every model type. `step(model, batch, lr)` performs one
/// optimizer update and returns the batch loss; `eval(model, columns)` returns mean NLL.
/// The parameters with the lowest validation NLL are restored at the end.
template <class Model, class Step, class Eval>
TrainResult run_training(Model& model, const Matrix& train_cols, const Matrix& val_cols,
                         const TrainConfig& cfg, Step&& step, Eval&& eval) {
  cfg.validate();
  TrainResult result;
  if (train_cols.cols() == 0) throw Error(ErrorCode::InvalidArgument, "training split is empty");
  const bool has_val = val_cols.cols() > 0;
  const Matrix& monitor = has_val ? val_cols : train_cols;

  Rng rng(mix_seed(cfg.seed, 0x7472u));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_cols.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Model best = model;
  result.best_val_nll = eval(model, monitor);
  double lr = cfg.learning_rate;
  double plateau_best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0, since_plateau = 0;
  const auto bs = static_cast<Eigen::Index>(cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (Eigen::Index start = 0; start < train_cols.cols(); start += bs) {
      const Eigen::Index len = std::min(bs, train_cols.cols() - start);
      Matrix batch(train_cols.rows(), len);
      for (Eigen::Index k = 0; k < len; ++k) {
        batch.col(k) = train_cols.col(order[static_cast<std::size_t>(start + k)]);
      }
      loss_sum += step(model, batch, lr) * static_cast<double>(len);
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train_cols.cols()), eval(model, monitor), lr};
    result.history.push_back(rec);

    if (rec.val_nll < result.best_val_nll) {
      result.best_val_nll = rec.val_nll;
      result.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (cfg.lr_schedule == LrSchedule::Plateau) {
      // the epoch training loss drives the schedule; validation only picks the best model
      if (rec.train_nll < plateau_best) {
        plateau_best = rec.train_nll;
        since_plateau = 0;
      } else if (++since_plateau > cfg.plateau_patience) {
        lr *= cfg.plateau_factor;
        since_plateau = 0;
      }
    }
    if (since_best >= cfg.early_stop_patience) break;
  }
  model = std::move(best);
  return result;
}

inline double mean_nll(const MaskedMLP& net, const Matrix& cols) {
  return cols.cols() == 0 ? 0.0 : sample_nll(net, cols).mean();
}

/// Trains a masked network on the dataset's train split, early-stopping on validation NLL.
/// With `standardize`, a gaussian network first adopts the training split's per-feature
/// moments as its fixed pre-map.
inline TrainResult train(MaskedMLP& net, const Dataset& data, const TrainConfig& cfg, bool standardize = true) {
  if ((data.kind == DataKind::Binary) != (net.head() == Head::Binary)) {
    throw Error(ErrorCode::InvalidArgument, "dataset kind does not match the network head");
  }
  if (data.dim() != net.input_dim()) throw Error(ErrorCode::DimMismatch, "dataset width differs from network");
  if (standardize && net.head() == Head::Gaussian && !data.split.train.empty()) {
    auto [loc, scale] = feature_moments(data.samples, data.split.train);
    net.set_standardization(std::move(loc), std::move(scale));
  }
  const Matrix tr = gather_columns(data.samples, data.split.train);
  const Matrix va = gather_columns(data.samples, data.split.val);
  AdamW opt(net, cfg.adamw());
  Gradients g;
  return run_training(
      net, tr, va, cfg,
      [&](MaskedMLP& m, const Matrix& batch, double lr) {
        const double loss = batch_loss_and_gradients(m, batch, g);
        opt.step(m, g, lr);
        return loss;
      },
      [](const MaskedMLP& m, const Matrix& cols) { return mean_nll(m, cols); });
}

/// Per-sample NLL on the test split, summarized as mean and standard error.
inline MeanWithError test_nll(const MaskedMLP& net, const Dataset& data) {
  return mean_with_stderr(sample_nll(net, gather_columns(data.samples, data.split.test)));
}

}  // namespace strnn
