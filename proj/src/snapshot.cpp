#include "adacont/snapshot.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace adacont {

namespace {

// Shortest text that parses back to the same double.
std::string exact(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw SnapshotError("bad number for " + key + ": " + s);
    return v;
}

void check_token(const std::string& s, const char* what) {
    if (s.empty() || s.find_first_of("=\n") != std::string::npos)
        throw std::invalid_argument(std::string("snapshot header ") + what + " must be non-empty without '=' or newline");
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Problem& problem, std::span<const double> state,
                    const std::map<std::string, std::string>& extra) {
    if (state.size() != problem.size()) throw std::invalid_argument("snapshot state size does not match the problem");
    std::ostringstream head;
    head << "format=adacont-snapshot-1\n";
    head << "problem=" << problem.name() << "\n";
    head << "parameter=" << problem.parameter_name() << "\n";
    for (const auto& [k, v] : problem.parameters()) head << "param." << k << "=" << exact(v) << "\n";
    head << "layout=" << problem.layout().describe() << "\n";
    head << "size=" << state.size() << "\n";
    head << "dtype=f64\nbyte_order=little\n";
    for (const auto& [k, v] : extra) {
        check_token(k, "key");
        if (v.find('\n') != std::string::npos) throw std::invalid_argument("snapshot header value contains a newline");
        head << k << "=" << v << "\n";
    }
    head << "\n";

    std::string bytes(state.size() * 8, '\0');
    for (std::size_t i = 0; i < state.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &state[i], 8);
        for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
    const std::string h = head.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw SnapshotError("write failed: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError("cannot open " + path.string());
    const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Snapshot snap;
    std::size_t pos = 0;
    for (;;) {
        const auto nl = raw.find('\n', pos);
        if (nl == std::string::npos) throw SnapshotError(path.string() + ": header not terminated by a blank line");
        const std::string line = raw.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) break;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) throw SnapshotError(path.string() + ": bad header line '" + line + "'");
        snap.header[line.substr(0, eq)] = line.substr(eq + 1);
    }

    auto need = [&](const std::string& key) -> const std::string& {
        auto it = snap.header.find(key);
        if (it == snap.header.end()) throw SnapshotError(path.string() + ": missing header key " + key);
        return it->second;
    };
    if (need("byte_order") != "little") throw SnapshotError("unsupported byte order " + need("byte_order"));
    if (auto it = snap.header.find("dtype"); it != snap.header.end() && it->second != "f64")
        throw SnapshotError("unsupported dtype " + it->second);
    snap.problem = need("problem");
    try {
        snap.layout = BlockLayout::parse(need("layout"));
    } catch (const std::exception& e) {
        throw SnapshotError(path.string() + ": bad layout: " + e.what());
    }
    for (const auto& [k, v] : snap.header)
        if (k.rfind("param.", 0) == 0) snap.parameters[k.substr(6)] = parse_double(v, k);

    const std::size_t n = snap.layout.size();
    if (auto it = snap.header.find("size"); it != snap.header.end() && it->second != std::to_string(n))
        throw SnapshotError(path.string() + ": size does not match the layout");
    if (raw.size() - pos != 8 * n)
        throw SnapshotError(path.string() + ": payload has " + std::to_string(raw.size() - pos) + " bytes, expected " +
                            std::to_string(8 * n));
    snap.state.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= std::uint64_t(static_cast<unsigned char>(raw[pos + 8 * i + b])) << (8 * b);
        std::memcpy(&snap.state[i], &bits, 8);
    }
    return snap;
}

Vec load_state(const std::filesystem::path& path, const Problem& problem) {
    Snapshot s = read_snapshot(path);
    if (s.problem != problem.name())
        throw SnapshotError(path.string() + " holds a " + s.problem + " state, expected " + problem.name());
    if (!(s.layout == problem.layout()))
        throw SnapshotError(path.string() + ": layout " + s.layout.describe() + " does not match " +
                            problem.layout().describe());
    return std::move(s.state);
}

}  // namespace adacont
