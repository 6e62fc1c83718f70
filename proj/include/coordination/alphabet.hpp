#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace coord {

// A named finite symbol set. Symbol order is part of the identity: tensor
// indexing and row layouts depend on it.
class Alphabet {
public:
    Alphabet(std::string name, std::vector<std::string> symbols);

    const std::string& name() const { return name_; }
    int size() const { return static_cast<int>(symbols_.size()); }
    const std::string& symbol(int i) const { return symbols_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::string>& symbols() const { return symbols_; }

    // -1 if the symbol is not present
    int index_of(std::string_view symbol) const;

    bool operator==(const Alphabet& other) const {
        return name_ == other.name_ && symbols_ == other.symbols_;
    }

private:
    std::string name_;
    std::vector<std::string> symbols_;
};

// Convenience: symbols "0".."n-1"
Alphabet numeric_alphabet(std::string name, int n);

}  // namespace coord
