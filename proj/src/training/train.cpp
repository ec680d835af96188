#include "afca/training/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace afca {

double default_l1_lambda(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return 0.01;
    case LayerKind::Lstm: return 0.0016;
    case LayerKind::AfLstm: return 1.2e-6;
  }
  return 0.0;
}

TrainConfig TrainConfig::defaults_for(LayerKind kind) {
  TrainConfig c;
  c.l1_lambda = default_l1_lambda(kind);
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (n_batches < 1) throw ConfigError("n_batches must be >= 1");
  if (!(l1_lambda >= 0.0)) throw ConfigError("l1_lambda must be >= 0");
  if (early_stop_tolerance < 1) throw ConfigError("early_stop_tolerance must be >= 1");
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) os << e + 1 << ',' << h.train_loss[e] << ',' << h.val_loss[e] << '\n';
  return os.str();
}

void save_history(const TrainHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write history file " + path.string());
  out << history_csv(h);
}

Var_ loss(Graph_& g, Model& model, const Batch& batch, double l1_lambda, NormMode mode) {
  if (batch.size() == 0) throw DataError("loss on an empty batch");
  auto y_hat = model.forward(g, batch, mode);
  auto err = mean(square(y_hat - g.constant(batch.y)));
  if (l1_lambda == 0.0) return err;
  const auto w = model.weights();
  return err + l1_penalty(g, std::span<const MatrixXd* const>(w), l1_lambda);
}

double loss_value(const Model& model, const Batch& batch, double l1_lambda) {
  if (batch.size() == 0) throw DataError("loss on an empty batch");
  const double err = (model.predict(batch) - batch.y).array().square().mean();
  const auto w = model.weights();
  return err + l1_penalty(std::span<const MatrixXd* const>(w), l1_lambda);
}

double mse(const Model& model, const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("mse over no rows");
  return residual(model, data, rows).array().square().mean();
}

TrainResult train_one(Model model, const Dataset& data, const TrainConfig& config, std::uint64_t seed,
                      const TrainHooks& hooks) {
  config.validate();
  auto train_rows = data.rows_of(Split::Train);
  const auto val_rows = data.rows_of(Split::Validation);
  if (train_rows.empty() || val_rows.empty()) throw DataError("training needs nonempty train and validation splits");

  SplitMix64 rng = SplitMix64::stream(seed, 0x73687566666c65ULL);
  AdamState<Real> adam;
  adam.lr = config.lr;
  TrainHistory history;
  Model best = model;
  double best_val = 0.0;
  int since_best = 0;

  const auto n_batches = std::min<std::size_t>(static_cast<std::size_t>(config.n_batches), train_rows.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(train_rows);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      // near-equal contiguous chunks; the first (size % n) take one extra row
      const auto base = train_rows.size() / n_batches, extra = train_rows.size() % n_batches;
      const auto start = b * base + std::min(b, extra);
      const auto len = base + (b < extra ? 1 : 0);
      const auto batch = make_batch(data, std::span<const std::size_t>(train_rows).subspan(start, len), model.spec());

      Graph_ g;
      auto l = loss(g, model, batch, config.l1_lambda, NormMode::Train);
      const double lv = l.value()(0, 0);
      if (!std::isfinite(lv)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      }
      g.backward(l);
      auto params = model.parameters();
      std::vector<MatrixXd*> ptrs;
      std::vector<MatrixXd> grads;
      for (const auto& p : params) {
        ptrs.push_back(p.value);
        const auto* gr = g.grad_of(*p.value);
        grads.push_back(gr ? *gr : MatrixXd::Zero(p.value->rows(), p.value->cols()));
      }
      try {
        adam_step(std::span<MatrixXd* const>(ptrs), std::span<const MatrixXd>(grads), adam);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " + e.what());
      }
      epoch_loss += lv;
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));

    double val = mse(model, data, val_rows);
    if (hooks.val_loss_override) val = hooks.val_loss_override(epoch, val);
    if (!std::isfinite(val)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    history.val_loss.push_back(val);
    history.stopped_epoch = epoch;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);

    if (epoch == 1 || val < best_val) {
      best_val = val;
      best = model;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_tolerance) {
      break;
    }
  }
  return {std::move(best), std::move(history)};
}

EnsembleModel train_ensemble(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                             std::vector<TrainHistory>* histories) {
  config.validate();
  EnsembleModel out;
  out.spec = spec;
  if (histories) histories->clear();
  for (int k = 0; k < config.n_seeds; ++k) {
    const auto seed = config.base_seed + static_cast<std::uint64_t>(k);
    try {
      auto result = train_one(Model::build(spec, seed), data, config, seed);
      out.seeds.push_back(seed);
      out.members.push_back(std::move(result.model));
      if (histories) histories->push_back(std::move(result.history));
    } catch (const NumericError& e) {
      throw NumericError("ensemble member with seed " + std::to_string(seed) + " failed: " + e.what());
    }
  }
  return out;
}

}  // namespace afca
