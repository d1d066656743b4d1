#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace channelrank {

/// Row-major so that a sample (one row) is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Index of a channel in the original recording.
using ChannelId = std::size_t;

/// Class labels are arbitrary integers supplied by the dataset.
using Label = int;

/// Any failure raised by the pipeline (bad input, degenerate data, I/O).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed request from the caller: bad option value, unknown name, bad config.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace channelrank
