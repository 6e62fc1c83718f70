#include "coordination/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace coord {

namespace {

constexpr double kRowTol = 1e-12;

std::size_t product_size(const std::vector<Alphabet>& vars) {
    std::size_t n = 1;
    for (const auto& a : vars) n *= static_cast<std::size_t>(a.size());
    return n;
}

}  // namespace

Kernel::Kernel(std::vector<Alphabet> from, std::vector<Alphabet> to,
               std::vector<std::vector<double>> rows)
    : from_(std::move(from)), to_(std::move(to)), rows_(std::move(rows)) {
    if (to_.empty()) throw std::invalid_argument("kernel produces no variables");
    row_width_ = product_size(to_);
    const std::size_t expected_rows = product_size(from_);
    if (rows_.size() != expected_rows) {
        throw std::invalid_argument("kernel expects " + std::to_string(expected_rows) +
                                    " rows, got " + std::to_string(rows_.size()));
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != row_width_) {
            throw std::invalid_argument("kernel row " + std::to_string(r) + " has width " +
                                        std::to_string(rows_[r].size()) + ", expected " +
                                        std::to_string(row_width_));
        }
        long double sum = 0.0L;
        for (double v : rows_[r]) {
            if (v < 0.0 || !std::isfinite(v)) {
                throw std::invalid_argument("kernel row " + std::to_string(r) +
                                            " has a negative or non-finite entry");
            }
            sum += v;
        }
        if (std::fabs(static_cast<double>(sum) - 1.0) > kRowTol) {
            throw std::invalid_argument("kernel row " + std::to_string(r) + " sums to " +
                                        std::to_string(static_cast<double>(sum)));
        }
    }
}

Kernel Kernel::distribution(Alphabet to, std::vector<double> probs) {
    return Kernel({}, {std::move(to)}, {std::move(probs)});
}

Kernel Kernel::distribution(std::vector<Alphabet> to, std::vector<double> probs) {
    return Kernel({}, std::move(to), {std::move(probs)});
}

std::size_t Kernel::row_index(std::span<const int> from_symbols) const {
    if (from_symbols.size() != from_.size()) {
        throw std::invalid_argument("conditioning tuple arity mismatch");
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < from_.size(); ++i) {
        idx = idx * static_cast<std::size_t>(from_[i].size()) + static_cast<std::size_t>(from_symbols[i]);
    }
    return idx;
}

std::size_t Kernel::col_index(std::span<const int> to_symbols) const {
    if (to_symbols.size() != to_.size()) {
        throw std::invalid_argument("output tuple arity mismatch");
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < to_.size(); ++i) {
        idx = idx * static_cast<std::size_t>(to_[i].size()) + static_cast<std::size_t>(to_symbols[i]);
    }
    return idx;
}

}  // namespace coord
