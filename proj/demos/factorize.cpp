/// Factorizes a small adjacency matrix with each method and prints the masks.
#include <iostream>

#include "strnn/factorizer.hpp"

using namespace strnn;

int main() {
  const AdjacencyMatrix a = parse_adjacency(
      "5\n"
      "0 0 0 0 0\n"
      "1 0 0 0 0\n"
      "1 0 0 0 0\n"
      "0 1 1 0 0\n"
      "0 0 0 1 0\n");
  const std::vector<std::size_t> hidden{7};
  std::cout << "adjacency:\n" << format_matrix(a.entries()) << "\n";
  for (Method m : {Method::Greedy, Method::Exact, Method::Zuko}) {
    const MaskSet masks = factor_multilayer(a, hidden, m);
    const IntMatrix p = mask_product(masks);
    std::cout << (m == Method::Greedy ? "greedy" : m == Method::Exact ? "exact" : "zuko") << ": "
              << objective_value(p, Objective::MaxConnections) << " connections, sparsity "
              << (check_sparsity_equal(p, a) ? "ok" : "BROKEN") << "\n";
    std::cout << "input mask:\n" << format_matrix(masks.masks[0]) << "output mask:\n"
              << format_matrix(masks.masks[1]) << "product:\n" << format_matrix(p) << "\n";
  }

  Rng rng(0);
  const auto made = made_masks(5, hidden, rng, false);
  std::cout << "MADE product (compare with the adjacency):\n" << format_matrix(mask_product(made.masks));
  return 0;
}
