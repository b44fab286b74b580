#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hdiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// christoffel[i](j,k) = Gamma^i_{jk}; symmetric in (j,k).
using Christoffel = std::vector<Mat>;

// A tangent vector in chart components, remembering its base point and the
// metric time of its fiber.
struct TangentVector {
    Vec base;
    Vec components;
    double time = 0.0;
};

}  // namespace hdiff
