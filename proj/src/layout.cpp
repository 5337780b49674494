#include "adacont/layout.hpp"

#include <sstream>
#include <stdexcept>

namespace adacont {

void BlockLayout::add_block(std::string name, std::vector<FieldInfo> fields) {
    if (find(name)) {
        throw std::invalid_argument("duplicate block name: " + name);
    }
    for (const auto& f : fields) {
        for (const auto& other : blocks_) {
            for (const auto& g : other.fields) {
                if (g.name == f.name) throw std::invalid_argument("duplicate field name: " + f.name);
            }
        }
    }
    Block b;
    b.name = std::move(name);
    b.offset = size_;
    for (const auto& f : fields) b.size += f.size();
    b.fields = std::move(fields);
    size_ += b.size;
    blocks_.push_back(std::move(b));
}

const Block& BlockLayout::block(std::string_view name) const {
    if (auto i = find(name)) return blocks_[*i];
    throw std::out_of_range("unknown block: " + std::string(name));
}

std::optional<std::size_t> BlockLayout::find(std::string_view name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t BlockLayout::field_offset(std::string_view field) const {
    for (const auto& b : blocks_) {
        std::size_t off = b.offset;
        for (const auto& f : b.fields) {
            if (f.name == field) return off;
            off += f.size();
        }
    }
    throw std::out_of_range("unknown field: " + std::string(field));
}

const FieldInfo& BlockLayout::field(std::string_view field) const {
    for (const auto& b : blocks_) {
        for (const auto& f : b.fields) {
            if (f.name == field) return f;
        }
    }
    throw std::out_of_range("unknown field: " + std::string(field));
}

std::string BlockLayout::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (i) os << ';';
        os << blocks_[i].name << '[';
        for (std::size_t j = 0; j < blocks_[i].fields.size(); ++j) {
            const auto& f = blocks_[i].fields[j];
            if (j) os << ',';
            os << f.name << ':' << f.rows << 'x' << f.cols;
        }
        os << ']';
    }
    return os.str();
}

BlockLayout BlockLayout::parse(std::string_view text) {
    BlockLayout out;
    std::size_t pos = 0;
    auto fail = [&] { throw std::invalid_argument("malformed block layout: " + std::string(text)); };
    while (pos < text.size()) {
        auto open = text.find('[', pos);
        auto close = text.find(']', pos);
        if (open == std::string_view::npos || close == std::string_view::npos || close < open) fail();
        std::string name(text.substr(pos, open - pos));
        if (name.empty()) fail();
        std::vector<FieldInfo> fields;
        auto body = text.substr(open + 1, close - open - 1);
        std::size_t fpos = 0;
        while (fpos < body.size()) {
            auto comma = body.find(',', fpos);
            auto item = body.substr(fpos, comma == std::string_view::npos ? std::string_view::npos : comma - fpos);
            auto colon = item.find(':');
            auto cross = item.find('x', colon == std::string_view::npos ? 0 : colon);
            if (colon == std::string_view::npos || cross == std::string_view::npos) fail();
            FieldInfo f;
            f.name = std::string(item.substr(0, colon));
            try {
                f.rows = std::stoul(std::string(item.substr(colon + 1, cross - colon - 1)));
                f.cols = std::stoul(std::string(item.substr(cross + 1)));
            } catch (const std::exception&) {
                fail();
            }
            fields.push_back(std::move(f));
            if (comma == std::string_view::npos) break;
            fpos = comma + 1;
        }
        out.add_block(std::move(name), std::move(fields));
        pos = close + 1;
        if (pos < text.size()) {
            if (text[pos] != ';') fail();
            ++pos;
        }
    }
    return out;
}

bool BlockLayout::operator==(const BlockLayout& other) const {
    return describe() == other.describe();
}

}  // namespace adacont
