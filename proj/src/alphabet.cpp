#include "coordination/alphabet.hpp"

#include <stdexcept>
#include <unordered_set>

namespace coord {

Alphabet::Alphabet(std::string name, std::vector<std::string> symbols)
    : name_(std::move(name)), symbols_(std::move(symbols)) {
    if (symbols_.empty()) {
        throw std::invalid_argument("alphabet '" + name_ + "' has no symbols");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
        if (!seen.insert(s).second) {
            throw std::invalid_argument("alphabet '" + name_ + "' repeats symbol '" + s + "'");
        }
    }
}

int Alphabet::index_of(std::string_view symbol) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        if (symbols_[i] == symbol) return static_cast<int>(i);
    }
    return -1;
}

Alphabet numeric_alphabet(std::string name, int n) {
    std::vector<std::string> symbols;
    symbols.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) symbols.push_back(std::to_string(i));
    return Alphabet(std::move(name), std::move(symbols));
}

}  // namespace coord
