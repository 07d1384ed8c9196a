/// Fits a structured flow to a linear SEM and answers interventional and
/// counterfactual queries with it.
#include <iostream>

#include "strnn/causal.hpp"

using namespace strnn;

int main() {
  Rng rng(7);
  const LinearSEM sem = gen_linear_sem(5, 1.5, rng);
  std::cout << "SEM weights:\n" << sem.weights << "\n\n";

  Dataset data;
  data.kind = DataKind::Real;
  data.samples = sem_sample(sem, 1000, rng);
  split(data, {}, rng);

  const std::vector<std::size_t> hidden{10, 10, 10};
  AffineFlow flow(sem.adjacency(), 5, hidden, rng);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 300;
  cfg.early_stop_patience = 30;
  cfg.lr_schedule = LrSchedule::Plateau;
  train_flow(flow, data, cfg);
  std::cout << "test NLL " << test_nll(flow, data).mean << "\n";

  const Matrix xs = flow_intervene_sample(flow, 0, 2.0, 5000, rng);
  std::cout << "E[x | do(x_0 = 2)] flow:  " << xs.colwise().mean() << "\n";
  std::cout << "E[x | do(x_0 = 2)] truth: " << sem_intervene_means(sem, 0, 2.0).transpose() << "\n";

  const Vector x_obs = sem_sample(sem, 1, rng).row(0).transpose();
  std::cout << "observed:               " << x_obs.transpose() << "\n";
  std::cout << "counterfactual flow:    " << flow_counterfactual(flow, x_obs, 1, -1.0).transpose() << "\n";
  std::cout << "counterfactual truth:   " << sem_counterfactual(sem, x_obs, 1, -1.0).transpose() << "\n";

  std::cout << "total I-MSE " << total_imse(flow, sem, 0).total << ", total C-MSE " << total_cmse(flow, sem, 0).total
            << "\n";
  return 0;
}
