#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qcomp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A word is a sequence of symbol indices into some alphabet, in time order.
using Word = std::vector<std::size_t>;

}  // namespace qcomp
