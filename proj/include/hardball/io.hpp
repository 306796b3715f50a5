#pragma once

// Plain-text formats: the configuration table (header `d r n box` plus one
// coordinate line per ball, round-trip exact at 17 significant digits),
// trajectory and ledger CSV exports, and shared number formatting. All
// writers emit deterministic bytes for identical inputs.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardball/geometry.hpp"
#include "hardball/skorohod.hpp"

namespace hardball::io {

/// Shortest decimal that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string configuration_table(const BallConfiguration& c) {
    std::ostringstream os;
    os << c.dim << ' ' << format_double(c.radius) << ' ' << c.n_balls() << ' '
       << (c.box ? format_double(*c.box) : std::string("free")) << '\n';
    for (int b = 0; b < c.n_balls(); ++b) {
        const auto x = c.ball(b);
        for (int k = 0; k < c.dim; ++k) {
            if (k) os << ' ';
            os << format_double(x[k]);
        }
        os << '\n';
    }
    return os.str();
}

inline BallConfiguration parse_configuration_table(std::istream& in) {
    BallConfiguration c;
    int n = 0;
    std::string box_field;
    if (!(in >> c.dim >> c.radius >> n >> box_field))
        throw std::invalid_argument("bad configuration header; expected `d r n box`");
    if (box_field != "free") {
        try {
            c.box = std::stod(box_field);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad box field: " + box_field);
        }
    }
    c.pos.resize(static_cast<std::size_t>(n) * c.dim);
    for (auto& v : c.pos)
        if (!(in >> v)) throw std::invalid_argument("truncated configuration table");
    return c;
}

inline BallConfiguration parse_configuration_table(const std::string& text) {
    std::istringstream is(text);
    return parse_configuration_table(is);
}

inline BallConfiguration read_configuration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open configuration file: " + path);
    return parse_configuration_table(in);
}

/// trajectory.csv: step, time, ball, then one column per coordinate.
/// Ball labels are 1-based in exports.
inline std::string trajectory_csv(const std::vector<BallConfiguration>& trajectory, double dt) {
    if (trajectory.empty()) return "";
    const int dim = trajectory.front().dim;
    std::ostringstream os;
    os << "step,time,ball";
    for (int c = 0; c < dim; ++c) os << ",x" << c;
    os << '\n';
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        const double t = static_cast<double>(k) * dt;
        for (int b = 0; b < trajectory[k].n_balls(); ++b) {
            os << k << ',' << format_double(t) << ',' << (b + 1);
            for (double v : trajectory[k].ball(b)) os << ',' << format_double(v);
            os << '\n';
        }
    }
    return os.str();
}

/// ledger.csv: step, time, j, k, dL, cumulative L (1-based pair labels).
inline std::string ledger_csv(const ReflectionLedger& ledger) {
    std::ostringstream os;
    os << "step,time,j,k,dL,L\n";
    for (const auto& ev : ledger.events)
        os << ev.step << ',' << format_double(ev.time) << ',' << (ev.j + 1) << ',' << (ev.k + 1)
           << ',' << format_double(ev.dl) << ',' << format_double(ev.cumulative) << '\n';
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace hardball::io
