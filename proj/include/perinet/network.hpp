#pragma once

#include <string>
#include <vector>

#include "perinet/common.hpp"

namespace perinet {

// Directed graph over d nodes with its normalized influence matrix.
// adjacency is 0/1 with a zero diagonal; row i lists the nodes whose counts
// feed node i. W = diag(1/n_1, ..., 1/n_d) * adjacency with n_i the row sum,
// so every row of W sums to 1 except rows of isolated nodes, which are zero.
class NetworkSpec {
 public:
  NetworkSpec() = default;
  explicit NetworkSpec(Eigen::MatrixXi adjacency, std::vector<std::string> node_names = {});

  int size() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXi& adjacency() const { return adjacency_; }
  const Matrix& weights() const { return weights_; }
  // Number of in-neighbors of node i (row sum of adjacency).
  int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& node_names() const { return node_names_; }

 private:
  Eigen::MatrixXi adjacency_;
  Matrix weights_;
  std::vector<int> degrees_;
  std::vector<std::string> node_names_;
};

}  // namespace perinet
