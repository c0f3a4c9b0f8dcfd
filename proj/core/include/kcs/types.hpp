#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kcs {

// Covariates are stored one point per row.
using Points = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

// Base class for every runtime failure raised by the library. Precondition
// violations on arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kcs
