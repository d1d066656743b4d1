#pragma once

#include "channelrank/channelrank.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace test_support {

using channelrank::ChannelId;
using channelrank::Label;
using channelrank::LabeledMatrix;
using channelrank::Matrix;

// Test-side generator; deliberately not the library's Rng.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = normal(gen);
        }
    }
    return m;
}

inline Matrix from_rows(const std::vector<std::vector<double>>& rows)
{
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

/// First half label 1, second half label 2.
inline std::vector<Label> two_blocks(std::size_t rows)
{
    std::vector<Label> labels(rows, 1);
    for (std::size_t i = rows / 2; i < rows; ++i) {
        labels[i] = 2;
    }
    return labels;
}

inline LabeledMatrix labeled(Matrix x, std::vector<Label> labels)
{
    const auto cols = static_cast<std::size_t>(x.cols());
    return {std::move(x), std::move(labels), channelrank::identity_channels(cols)};
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            if (std::bit_cast<std::uint64_t>(a(r, c)) != std::bit_cast<std::uint64_t>(b(r, c))) {
                return false;
            }
        }
    }
    return true;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("channelrank_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace test_support
