#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adacont {

/// One physical field stored row-major inside a block.
struct FieldInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
};

/// A contiguous sub-range of the state vector that shares one preconditioner Δt.
struct Block {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::vector<FieldInfo> fields;
};

/// Named-block map describing which slice of a flat state holds which field.
class BlockLayout {
public:
    BlockLayout() = default;

    void add_block(std::string name, std::vector<FieldInfo> fields);

    std::size_t size() const { return size_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(std::string_view name) const;
    std::optional<std::size_t> find(std::string_view name) const;

    /// Offset of a named field across all blocks.
    std::size_t field_offset(std::string_view field) const;
    const FieldInfo& field(std::string_view field) const;

    /// Compact text form, e.g. `mean[u0:32x32,omega1:32x32];fluct[...]`.
    std::string describe() const;
    static BlockLayout parse(std::string_view text);

    bool operator==(const BlockLayout& other) const;

private:
    std::vector<Block> blocks_;
    std::size_t size_ = 0;
};

}  // namespace adacont
