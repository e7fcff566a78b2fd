#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gtaon/bitmatrix.hpp"
#include "gtaon/design.hpp"

namespace gtaon {

// Replay format for test designs: one JSON header line {p, k, n, design,
// seed}, then one hex line per row.  Nibble t of a row encodes columns
// 4t..4t+3, with column 4t in the most significant bit.
struct MatrixHeader {
    std::size_t p = 0;
    std::size_t k = 0;
    std::size_t n = 0;
    std::string design;
    std::uint64_t seed = 0;
};

inline void write_matrix(std::ostream& os, const BitMatrix& x, const MatrixHeader& header) {
    nlohmann::json j{{"p", header.p}, {"k", header.k}, {"n", header.n},
                     {"design", header.design}, {"seed", header.seed}};
    os << j.dump() << '\n';
    static constexpr char kHex[] = "0123456789abcdef";
    const std::size_t nibbles = (x.cols() + 3) / 4;
    std::string line(nibbles, '0');
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t t = 0; t < nibbles; ++t) {
            unsigned value = 0;
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t col = 4 * t + b;
                if (col < x.cols() && x.get(i, col)) value |= (8u >> b);
            }
            line[t] = kHex[value];
        }
        os << line << '\n';
    }
}

inline std::pair<BitMatrix, MatrixHeader> read_matrix(std::istream& is) {
    std::string header_line;
    if (!std::getline(is, header_line)) {
        throw std::runtime_error("read_matrix: missing header line");
    }
    const auto j = nlohmann::json::parse(header_line);
    MatrixHeader header;
    header.p = j.at("p").get<std::size_t>();
    header.k = j.at("k").get<std::size_t>();
    header.n = j.at("n").get<std::size_t>();
    header.design = j.at("design").get<std::string>();
    header.seed = j.at("seed").get<std::uint64_t>();

    BitMatrix x(header.n, header.p);
    std::string line;
    for (std::size_t i = 0; i < header.n; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("read_matrix: truncated hex dump");
        if (line.size() != (header.p + 3) / 4) {
            throw std::runtime_error("read_matrix: bad hex row length");
        }
        for (std::size_t t = 0; t < line.size(); ++t) {
            const char c = line[t];
            unsigned value;
            if (c >= '0' && c <= '9') {
                value = static_cast<unsigned>(c - '0');
            } else if (c >= 'a' && c <= 'f') {
                value = static_cast<unsigned>(c - 'a') + 10;
            } else {
                throw std::runtime_error("read_matrix: bad hex digit");
            }
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t col = 4 * t + b;
                if (col < header.p && (value & (8u >> b))) x.set(i, col);
            }
        }
    }
    return {std::move(x), header};
}

}  // namespace gtaon
