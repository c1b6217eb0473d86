#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace spicula::detail {

inline std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

inline std::uint64_t directed_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

inline std::pair<int, int> edge_ends(std::uint64_t key)
{
    return {static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)};
}

// Path-halving union-find over dense integer ids.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n)
    {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<int>(i);
    }

    int find(int x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Returns the surviving root. The root passed as `keep` wins when both differ.
    int unite_into(int keep, int other)
    {
        keep = find(keep);
        other = find(other);
        if (keep != other) parent_[other] = keep;
        return keep;
    }

private:
    std::vector<int> parent_;
};

} // namespace spicula::detail
