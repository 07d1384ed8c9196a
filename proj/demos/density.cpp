/// Trains a structured network and a MADE baseline on the same Gaussian data.
#include <iostream>

#include "strnn/datagen.hpp"
#include "strnn/factorizer.hpp"
#include "strnn/train.hpp"

using namespace strnn;

int main() {
  Rng rng(42);
  const AdjacencyMatrix a = gen_random_sparse(15, 0.7, rng);
  auto [data, sem] = gen_gaussian(a, 2000, rng);
  split(data, {}, rng);
  std::cout << "d = " << a.dim() << ", " << a.edge_count() << " edges, " << data.split.train.size()
            << " training samples\n";

  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 1000;
  cfg.early_stop_patience = 20;
  const std::vector<std::size_t> hidden{60, 60};

  Rng init(1);
  MaskedMLP strnn(factor_multilayer(a, hidden, Method::Greedy), Head::Gaussian, init);
  const auto r1 = train(strnn, data, cfg);
  const auto t1 = test_nll(strnn, data);

  Rng made_rng(2);
  MaskedMLP made(made_masks(a.dim(), hidden, made_rng, false).masks, Head::Gaussian, init);
  const auto r2 = train(made, data, cfg);
  const auto t2 = test_nll(made, data);

  const double truth = gaussian_sem_nll(sem, gather_columns(data.samples, data.split.test)).mean();
  std::cout << "StrNN test NLL " << t1.mean << " +/- " << t1.std_error << " (best epoch " << r1.best_epoch << ")\n";
  std::cout << "MADE  test NLL " << t2.mean << " +/- " << t2.std_error << " (best epoch " << r2.best_epoch << ")\n";
  std::cout << "true density   " << truth << "\n";
  return 0;
}
