#include "perinet/network.hpp"

namespace perinet {

NetworkSpec::NetworkSpec(Eigen::MatrixXi adjacency, std::vector<std::string> node_names)
    : adjacency_(std::move(adjacency)), node_names_(std::move(node_names)) {
  const Eigen::Index d = adjacency_.rows();
  if (adjacency_.cols() != d) throw config_error("NetworkSpec: adjacency must be square");
  if (d == 0) throw config_error("NetworkSpec: adjacency must be nonempty");
  if (!node_names_.empty() && static_cast<Eigen::Index>(node_names_.size()) != d) {
    throw config_error("NetworkSpec: node name count does not match adjacency size");
  }
  weights_ = Matrix::Zero(d, d);
  degrees_.assign(static_cast<std::size_t>(d), 0);
  for (Eigen::Index i = 0; i < d; ++i) {
    int deg = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const int m = adjacency_(i, j);
      if (m != 0 && m != 1) throw config_error("NetworkSpec: adjacency entries must be 0 or 1");
      if (i == j && m != 0) {
        throw config_error("NetworkSpec: self-loop at node " + std::to_string(i + 1));
      }
      deg += m;
    }
    degrees_[static_cast<std::size_t>(i)] = deg;
    if (deg > 0) {
      for (Eigen::Index j = 0; j < d; ++j) {
        weights_(i, j) = static_cast<double>(adjacency_(i, j)) / static_cast<double>(deg);
      }
    }
    // deg == 0: row of W stays zero, the node listens to nobody.
  }
}

}  // namespace perinet
