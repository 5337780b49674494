#pragma once

#include "adacont/problem.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace adacont {

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text header of key=value lines, a blank line, then the state as
/// little-endian f64 in block order.
struct Snapshot {
    std::map<std::string, std::string> header;
    std::string problem;
    std::map<std::string, double> parameters;  // from `param.<name>` keys
    BlockLayout layout;
    Vec state;
};

/// `extra` keys are written after the standard ones and must not contain '=' or newlines.
void write_snapshot(const std::filesystem::path& path, const Problem& problem, std::span<const double> state,
                    const std::map<std::string, std::string>& extra = {});

Snapshot read_snapshot(const std::filesystem::path& path);

/// Read a snapshot and check that it matches the problem's name and layout.
Vec load_state(const std::filesystem::path& path, const Problem& problem);

}  // namespace adacont
