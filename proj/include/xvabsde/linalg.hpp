#pragma once

// Eigen's own threading is disabled so that every reduction in this
// library runs in the fixed order required by the determinism contract;
// parallelism lives at the path level instead.
#ifndef EIGEN_DONT_PARALLELIZE
#define EIGEN_DONT_PARALLELIZE
#endif

#include <Eigen/Dense>

namespace xvabsde {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace xvabsde
