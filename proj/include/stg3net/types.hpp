#ifndef STG3NET_TYPES_HPP
#define STG3NET_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stg3net {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = std::ptrdiff_t;
using Labels = std::vector<int>;

/**
 * Invalid configuration or parameter values.
 */
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Malformed, inconsistent or degenerate input data.
 */
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * A computation produced a non-finite value.
 */
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Derive a child seed from a base seed and a sequence of tags, so that
 * independent streams (per epoch, per anchor, ...) never share state.
 */
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

}

#endif
