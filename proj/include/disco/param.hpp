#pragma once

#include <string>
#include <utility>

#include <Eigen/Core>

namespace disco {

/// A trainable array together with its structural mask. Entries where the
/// mask is 0 are held at exactly zero and are not counted as parameters.
/// A frozen parameter keeps its value and is skipped by optimizers.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd mask;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Eigen::MatrixXd v, Eigen::MatrixXd m, bool train = true)
      : name(std::move(n)), value(std::move(v)), mask(std::move(m)), trainable(train) {
    project();
  }

  void project() { value = value.cwiseProduct(mask); }
  Eigen::Index trainable_count() const { return trainable ? static_cast<Eigen::Index>(mask.sum()) : 0; }
};

}  // namespace disco
