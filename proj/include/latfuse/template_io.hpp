#pragma once

// Line-oriented minutiae template files.
//
//   # id=<string> w=<int> h=<int>     optional header, any subset of keys
//   # anything else                   comment
//   x y theta [quality]               one minutia per line, radians
//
// Writers emit the shortest decimal that round-trips each double exactly.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "minutia.hpp"

namespace latfuse {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

inline bool parse_int(std::string_view s, int& out)
{
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

/// Shortest round-trip representation.
inline std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Fixed 6-decimal representation used by every CSV writer.
inline std::string format_fixed6(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    return std::string(buf, ptr);
}

} // namespace detail

/// Parses template text. `fallback_id` is used when the header carries no id.
inline MinutiaeTemplate parse_template(std::istream& in, const std::string& fallback_id = {})
{
    MinutiaeTemplate t;
    t.id = fallback_id;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tokens = detail::split_ws(line);
        if (tokens.empty())
            continue;
        if (tokens.front().front() == '#') {
            for (auto tok : tokens) {
                if (tok.starts_with("#"))
                    tok.remove_prefix(1);
                int v = 0;
                if (tok.starts_with("id=")) {
                    t.id = std::string(tok.substr(3));
                } else if (tok.starts_with("w=")) {
                    if (!detail::parse_int(tok.substr(2), v))
                        throw ParseError("bad width in header", lineno);
                    t.width = v;
                } else if (tok.starts_with("h=")) {
                    if (!detail::parse_int(tok.substr(2), v))
                        throw ParseError("bad height in header", lineno);
                    t.height = v;
                }
            }
            continue;
        }
        if (tokens.size() != 3 && tokens.size() != 4)
            throw ParseError("expected 'x y theta [quality]', got " +
                                 std::to_string(tokens.size()) + " fields",
                             lineno);
        double vals[4] = {0.0, 0.0, 0.0, 1.0};
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            if (!detail::parse_double(tokens[k], vals[k]))
                throw ParseError("not a number: '" + std::string(tokens[k]) + "'", lineno);
            if (!std::isfinite(vals[k]))
                throw ParseError("non-finite value: '" + std::string(tokens[k]) + "'", lineno);
        }
        if (vals[3] < 0.0 || vals[3] > 1.0)
            throw ParseError("quality outside [0,1]", lineno);
        t.minutiae.emplace_back(vals[0], vals[1], vals[2], vals[3]);
    }
    return t;
}

inline MinutiaeTemplate load_template(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open template file: " + path.string());
    return parse_template(in, path.stem().string());
}

inline void write_template(std::ostream& out, const MinutiaeTemplate& t)
{
    out << "# id=" << t.id;
    if (t.width)
        out << " w=" << *t.width;
    if (t.height)
        out << " h=" << *t.height;
    out << '\n';
    for (const auto& m : t.minutiae) {
        out << detail::format_double(m.x) << ' ' << detail::format_double(m.y) << ' '
            << detail::format_double(m.theta) << ' ' << detail::format_double(m.quality)
            << '\n';
    }
}

inline void save_template(const MinutiaeTemplate& t, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write template file: " + path.string());
    write_template(out, t);
    if (!out)
        throw IoError("write failed: " + path.string());
}

} // namespace latfuse
