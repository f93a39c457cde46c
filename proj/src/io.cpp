#include "phantom/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace phantom {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    return out;
}

std::string where(const std::string& source, std::size_t line, std::size_t col) {
    return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

struct Token {
    std::string_view text;
    std::size_t col; // 1-based character column
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

double parse_double(const Token& t, const std::string& source, std::size_t line) {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        fail(ErrorKind::Parse, where(source, line, t.col) + ": not a number '" + std::string(t.text) + "'");
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, source + ":" + std::to_string(line) + ": non-finite value");
    return v;
}

Index parse_count(const Token& t, const std::string& source, std::size_t line) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || v < 0)
        fail(ErrorKind::Parse, where(source, line, t.col) + ": bad dimension '" + std::string(t.text) + "'");
    return static_cast<Index>(v);
}

struct Header {
    Index rows = 0, cols = 0;
};

Header read_header(std::istream& in, const std::string& source, std::size_t& lineno) {
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        const auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (toks.size() != 2) fail(ErrorKind::Parse, where(source, lineno, 1) + ": expected `rows cols` header");
        Header h{parse_count(toks[0], source, lineno), parse_count(toks[1], source, lineno)};
        if (h.rows > 0 && h.cols > kMaxMatrixEntries / h.rows)
            fail(ErrorKind::Parse, source + ": matrix larger than " + std::to_string(kMaxMatrixEntries) + " entries");
        return h;
    }
    fail(ErrorKind::Parse, source + ": missing header");
}

void write_row(std::ostream& os, const Matrix& m, Index r) {
    char buf[32];
    for (Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        if (c) os << ' ';
        os << buf;
    }
}

} // namespace

Matrix parse_matrix(std::istream& in, const std::string& source) {
    std::size_t lineno = 0;
    const Header h = read_header(in, source, lineno);
    Matrix m(h.rows, h.cols);
    Index r = 0;
    std::string line;
    while (r < h.rows && std::getline(in, line)) {
        ++lineno;
        const auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (static_cast<Index>(toks.size()) != h.cols)
            fail(ErrorKind::Parse, where(source, lineno, toks.size() < static_cast<std::size_t>(h.cols)
                                                             ? line.size() + 1
                                                             : toks[static_cast<std::size_t>(h.cols)].col) +
                                       ": expected " + std::to_string(h.cols) + " values, found " +
                                       std::to_string(toks.size()));
        for (Index c = 0; c < h.cols; ++c) m(r, c) = parse_double(toks[c], source, lineno);
        ++r;
    }
    if (r < h.rows)
        fail(ErrorKind::Parse, source + ":" + std::to_string(lineno + 1) + ": expected " + std::to_string(h.rows) +
                                   " rows, found " + std::to_string(r));
    while (std::getline(in, line)) {
        ++lineno;
        if (!tokenize(line).empty()) fail(ErrorKind::Parse, where(source, lineno, 1) + ": trailing data after matrix");
    }
    return m;
}

Matrix load_matrix(const std::string& path) {
    auto in = open_in(path);
    return parse_matrix(in, path);
}

void write_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
        write_row(os, m, r);
        os << '\n';
    }
}

void save_matrix(const std::string& path, const Matrix& m) {
    auto out = open_out(path);
    write_matrix(out, m);
}

EmbeddingTable load_embeddings(const std::string& path, bool normalize) {
    auto in = open_in(path);
    std::size_t lineno = 0;
    const Header h = read_header(in, path, lineno);
    std::vector<std::string> ids;
    Matrix m(h.rows, h.cols);
    std::string line;
    Index r = 0;
    while (r < h.rows && std::getline(in, line)) {
        ++lineno;
        const auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (static_cast<Index>(toks.size()) != h.cols + 1)
            fail(ErrorKind::Parse, where(path, lineno, 1) + ": expected id and " + std::to_string(h.cols) + " values");
        ids.emplace_back(toks[0].text);
        for (Index c = 0; c < h.cols; ++c) m(r, c) = parse_double(toks[c + 1], path, lineno);
        ++r;
    }
    if (r < h.rows) fail(ErrorKind::Parse, path + ": expected " + std::to_string(h.rows) + " rows");
    EmbeddingTable t(std::move(ids), std::move(m));
    return normalize ? normalize_embeddings(t) : t;
}

void save_embeddings(const std::string& path, const std::vector<std::string>& ids, const Matrix& vectors) {
    require_shape(static_cast<Index>(ids.size()) == vectors.rows(), "one id per embedding row required");
    auto out = open_out(path);
    out << vectors.rows() << ' ' << vectors.cols() << '\n';
    for (Index r = 0; r < vectors.rows(); ++r) {
        out << ids[static_cast<std::size_t>(r)] << ' ';
        write_row(out, vectors, r);
        out << '\n';
    }
}

std::vector<std::string> load_labels(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

void save_labels(const std::string& path, const std::vector<std::string>& labels) {
    auto out = open_out(path);
    for (const auto& l : labels) out << l << '\n';
}

ClassSplit load_split(const std::string& path) {
    auto in = open_in(path);
    ClassSplit split;
    std::vector<std::string>* section = nullptr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == "[seen]") {
            section = &split.seen;
        } else if (line == "[unseen]") {
            section = &split.unseen;
        } else {
            if (!section) fail(ErrorKind::Parse, where(path, lineno, 1) + ": class id before [seen]/[unseen] header");
            section->push_back(line);
        }
    }
    return split;
}

void save_split(const std::string& path, const ClassSplit& split) {
    auto out = open_out(path);
    out << "[seen]\n";
    for (const auto& s : split.seen) out << s << '\n';
    out << "[unseen]\n";
    for (const auto& s : split.unseen) out << s << '\n';
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

} // namespace phantom
