#pragma once

// Plain-text field formats: discrete fields as ASCII PGM ("P2", maxval K-1),
// continuous fields as a CSV matrix with H rows of W values.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/noise.hpp"
#include "gibbsel/reftable.hpp"

namespace gibbsel {

inline void write_pgm(std::ostream& os, const DiscreteField& field)
{
    const LatticeShape s = field.shape();
    os << "P2\n" << s.width << ' ' << s.height << '\n' << field.colors() - 1 << '\n';
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) os << (c ? " " : "") << field.at(r, c);
        os << '\n';
    }
}

namespace detail {

/// Next whitespace-separated PGM token, skipping '#' comments.
inline bool pgm_token(std::istream& is, std::string& tok)
{
    tok.clear();
    char ch;
    while (is.get(ch)) {
        if (ch == '#') {
            std::string rest;
            std::getline(is, rest);
            if (!tok.empty()) return true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) return true;
            continue;
        }
        tok.push_back(ch);
    }
    return !tok.empty();
}

inline int pgm_int(std::istream& is, const char* what)
{
    std::string tok;
    if (!pgm_token(is, tok)) throw FormatError(std::string("PGM: missing ") + what);
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw FormatError(std::string("PGM: bad ") + what + " '" + tok + "'");
    return v;
}

}  // namespace detail

/// K = maxval + 1.
inline DiscreteField read_pgm(std::istream& is)
{
    std::string magic;
    if (!detail::pgm_token(is, magic) || magic != "P2") throw FormatError("PGM: expected magic P2");
    const int width = detail::pgm_int(is, "width");
    const int height = detail::pgm_int(is, "height");
    const int maxval = detail::pgm_int(is, "maxval");
    if (width < 1 || height < 1) throw FormatError("PGM: dimensions must be positive");
    if (maxval < 1) throw FormatError("PGM: maxval must be >= 1 (at least two colors)");
    const LatticeShape shape{height, width};
    std::vector<int> values(shape.sites());
    for (int& v : values) {
        v = detail::pgm_int(is, "pixel value");
        if (v < 0 || v > maxval) throw FormatError("PGM: pixel value outside [0, maxval]");
    }
    return DiscreteField(shape, maxval + 1, std::move(values));
}

inline void write_csv_field(std::ostream& os, const ContinuousField& field)
{
    const LatticeShape s = field.shape();
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c)
            os << (c ? "," : "") << detail::format_double(field[static_cast<std::size_t>(s.index(r, c))]);
        os << '\n';
    }
}

inline ContinuousField read_csv_field(std::istream& is)
{
    std::vector<double> values;
    int height = 0, width = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split(line, ',');
        if (width < 0) width = static_cast<int>(cells.size());
        if (static_cast<int>(cells.size()) != width)
            throw FormatError("CSV field: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " values, expected " + std::to_string(width));
        for (auto cell : cells) values.push_back(detail::parse_double(cell, lineno));
        ++height;
    }
    if (height == 0) throw FormatError("CSV field: no data");
    return ContinuousField({height, width}, std::move(values));
}

inline DiscreteField load_pgm(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return read_pgm(is);
}

inline ContinuousField load_csv_field(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return read_csv_field(is);
}

inline void save_pgm(const DiscreteField& field, const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_pgm(os, field);
}

inline void save_csv_field(const ContinuousField& field, const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_csv_field(os, field);
}

}  // namespace gibbsel
