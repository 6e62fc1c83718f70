#pragma once

#include <span>
#include <vector>

#include "coordination/alphabet.hpp"

namespace coord {

// Conditional probability table. `from` lists the conditioning variables (may
// be empty, giving an unconditional distribution); `to` lists the produced
// variables. Rows are stored row-major over the `from` tuple, each row a
// probability vector over the `to` product alphabet.
class Kernel {
public:
    Kernel(std::vector<Alphabet> from, std::vector<Alphabet> to,
           std::vector<std::vector<double>> rows);

    static Kernel distribution(Alphabet to, std::vector<double> probs);
    static Kernel distribution(std::vector<Alphabet> to, std::vector<double> probs);

    const std::vector<Alphabet>& from() const { return from_; }
    const std::vector<Alphabet>& to() const { return to_; }

    std::size_t row_count() const { return rows_.size(); }
    std::size_t row_width() const { return row_width_; }
    std::span<const double> row(std::size_t r) const { return rows_.at(r); }
    std::vector<std::vector<double>>& mutable_rows() { return rows_; }

    // flat index of a conditioning tuple / output tuple
    std::size_t row_index(std::span<const int> from_symbols) const;
    std::size_t col_index(std::span<const int> to_symbols) const;

    bool row_uniform_filled(std::size_t r) const {
        return !uniform_filled_.empty() && uniform_filled_.at(r) != 0;
    }
    void mark_uniform_filled(std::vector<std::uint8_t> flags) { uniform_filled_ = std::move(flags); }

private:
    std::vector<Alphabet> from_;
    std::vector<Alphabet> to_;
    std::vector<std::vector<double>> rows_;
    std::vector<std::uint8_t> uniform_filled_;
    std::size_t row_width_ = 0;
};

}  // namespace coord
