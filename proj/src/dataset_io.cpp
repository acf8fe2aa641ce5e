#include "gibbsrate/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

long parse_int(std::string_view text) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Parse, "not an integer: '" + std::string(text) + "'");
    }
    return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw Error(ErrorKind::Io, "number formatting failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw Error(ErrorKind::Parse, "not a number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(v)) throw Error(ErrorKind::Parse, "non-finite value: '" + std::string(text) + "'");
    return v;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    static constexpr const char* kIndexNames[] = {"i", "j", "k"};
    for (int c = 0; c < data.arity(); ++c) out << (c ? "," : "") << kIndexNames[c];
    for (Index c = 0; c < data.ell(); ++c) out << ",y_" << c + 1;
    out << '\n';
    for (Index r = 0; r < data.size(); ++r) {
        for (int c = 0; c < data.arity(); ++c) out << (c ? "," : "") << data.index()[r][c] + 1;
        for (Index c = 0; c < data.ell(); ++c) out << ',' << format_double(data.y()(r, c));
        out << '\n';
    }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    auto out = open_out(path);
    write_dataset_csv(out, data);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw Error(ErrorKind::Parse, "dataset file is empty");
    const auto header = split(line);
    static constexpr std::string_view kIndexNames[] = {"i", "j", "k"};
    int arity = 0;
    while (arity < 3 && arity < static_cast<int>(header.size()) && header[arity] == kIndexNames[arity]) ++arity;
    const Index ell = static_cast<Index>(header.size()) - arity;
    if (arity == 0 || ell < 1) throw Error(ErrorKind::Parse, "dataset header must be i[,j[,k]],y_1,...");
    for (Index c = 0; c < ell; ++c) {
        if (header[arity + c] != "y_" + std::to_string(c + 1)) {
            throw Error(ErrorKind::Parse, "unexpected dataset column '" + std::string(header[arity + c]) + "'");
        }
    }
    std::vector<Dataset::Key> index;
    std::vector<double> values;
    int row = 1;
    while (next_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::Parse, "row " + std::to_string(row) + " has the wrong number of fields");
        }
        Dataset::Key key{0, 0, 0};
        for (int c = 0; c < arity; ++c) {
            const long v = parse_int(cells[c]);
            if (v < 1 || v > 1'000'000'000) throw Error(ErrorKind::Parse, "indices are 1-based positive integers");
            key[c] = static_cast<int>(v - 1);
        }
        index.push_back(key);
        for (Index c = 0; c < ell; ++c) values.push_back(parse_double(cells[arity + c]));
    }
    if (index.empty()) throw Error(ErrorKind::Parse, "dataset has no rows");
    Matrix y(static_cast<Index>(index.size()), ell);
    for (Index r = 0; r < y.rows(); ++r)
        for (Index c = 0; c < ell; ++c) y(r, c) = values[r * ell + c];
    return Dataset(arity, std::move(index), std::move(y));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_dataset_csv(in);
}

void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
    out << "sweep";
    for (const auto& b : trace.layout)
        for (Index k = 0; k < b.size; ++k) out << ',' << b.name << '_' << k + 1;
    out << '\n';
    for (Index t = 0; t < trace.length(); ++t) {
        out << trace.burn_in + 1 + t * trace.thinning;
        for (Index c = 0; c < trace.dim(); ++c) out << ',' << format_double(trace.states(t, c));
        out << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const ChainTrace& trace) {
    auto out = open_out(path);
    write_trace_csv(out, trace);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

ChainTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw Error(ErrorKind::Parse, "trace file is empty");
    const auto header = split(line);
    if (header.empty() || header[0] != "sweep" || header.size() < 2) {
        throw Error(ErrorKind::Parse, "trace header must start with 'sweep'");
    }
    ChainTrace trace;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string_view col = header[c];
        const std::size_t us = col.rfind('_');
        if (us == std::string_view::npos || us == 0) {
            throw Error(ErrorKind::Parse, "trace column '" + std::string(col) + "' is not <block>_<k>");
        }
        const std::string name(col.substr(0, us));
        const long k = parse_int(col.substr(us + 1));
        const Index at = static_cast<Index>(c - 1);
        if (!trace.layout.empty() && trace.layout.back().name == name && k == trace.layout.back().size + 1) {
            ++trace.layout.back().size;
        } else if (k == 1) {
            for (const auto& b : trace.layout)
                if (b.name == name) throw Error(ErrorKind::Parse, "block '" + name + "' appears twice");
            trace.layout.push_back({name, at, 1});
        } else {
            throw Error(ErrorKind::Parse, "trace column '" + std::string(col) + "' is out of sequence");
        }
    }
    const Index dim = static_cast<Index>(header.size()) - 1;
    std::vector<long> sweeps;
    std::vector<double> values;
    int row = 1;
    while (next_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::Parse, "trace row " + std::to_string(row) + " has the wrong number of fields");
        }
        sweeps.push_back(parse_int(cells[0]));
        for (Index c = 0; c < dim; ++c) values.push_back(parse_double(cells[c + 1]));
    }
    if (sweeps.empty()) throw Error(ErrorKind::Parse, "trace has no rows");
    trace.burn_in = static_cast<int>(sweeps.front() - 1);
    trace.thinning = sweeps.size() > 1 ? static_cast<int>(sweeps[1] - sweeps[0]) : 1;
    if (trace.burn_in < 0 || trace.thinning < 1) throw Error(ErrorKind::Parse, "trace sweep numbers are invalid");
    for (std::size_t t = 0; t < sweeps.size(); ++t) {
        if (sweeps[t] != sweeps.front() + static_cast<long>(t) * trace.thinning) {
            throw Error(ErrorKind::Parse, "trace sweep numbers are not evenly spaced");
        }
    }
    trace.states.resize(static_cast<Index>(sweeps.size()), dim);
    for (Index t = 0; t < trace.states.rows(); ++t)
        for (Index c = 0; c < dim; ++c) trace.states(t, c) = values[t * dim + c];
    return trace;
}

ChainTrace read_trace_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_trace_csv(in);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace gibbsrate
