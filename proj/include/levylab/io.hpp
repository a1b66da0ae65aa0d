#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace levylab {

using json = nlohmann::json;

/// Shortest exact decimal form via %.17g (deterministic per binary).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// SHA-256 (for the manifest's content hash of the input config)
// ---------------------------------------------------------------------------

namespace detail {

class Sha256 {
  public:
    Sha256() { reset(); }

    void update(const void* data, std::size_t len) {
        auto p = static_cast<const std::uint8_t*>(data);
        while (len--) {
            buf_[buflen_++] = *p++;
            if (buflen_ == 64) { transform(); buflen_ = 0; total_ += 64; }
        }
    }

    std::string hex_digest() {
        total_ += buflen_;
        const std::uint64_t bits = total_ * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        pad = 0;
        while (buflen_ != 56) update(&pad, 1);
        for (int i = 7; i >= 0; --i) {
            const auto b = static_cast<std::uint8_t>(bits >> (8 * i));
            buf_[buflen_++] = b;
        }
        transform();
        std::ostringstream out;
        for (std::uint32_t h : state_) {
            char chunk[9];
            std::snprintf(chunk, sizeof(chunk), "%08x", h);
            out << chunk;
        }
        return out.str();
    }

  private:
    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buflen_ = 0;
        total_ = 0;
    }

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void transform() {
        static constexpr std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(buf_[4 * i]) << 24) | (std::uint32_t(buf_[4 * i + 1]) << 16) |
                   (std::uint32_t(buf_[4 * i + 2]) << 8) | std::uint32_t(buf_[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, h] = std::tuple{state_[0], state_[1], state_[2], state_[3],
                                                   state_[4], state_[5], state_[6], state_[7]};
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = h + S1 + ch + K[i] + w[i];
            const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = S0 + mj;
            h = g; g = f; f = e; e = d + t1; d = c; c = b; b = a; a = t1 + t2;
        }
        state_[0] += a; state_[1] += b; state_[2] += c; state_[3] += d;
        state_[4] += e; state_[5] += f; state_[6] += g; state_[7] += h;
    }

    std::array<std::uint32_t, 8> state_{};
    std::uint8_t buf_[64] = {};
    std::size_t buflen_ = 0;
    std::uint64_t total_ = 0;
};

}  // namespace detail

inline std::string sha256_hex(const std::string& data) {
    detail::Sha256 h;
    h.update(data.data(), data.size());
    return h.hex_digest();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<std::string>& row) {
        if (row.size() != header_.size())
            throw std::invalid_argument("CsvWriter: row width mismatch");
        rows_.push_back(row);
    }

    std::string str() const {
        std::ostringstream out;
        write_line(out, header_);
        for (const auto& r : rows_) write_line(out, r);
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("CsvWriter: cannot open " + path);
        out << str();
    }

    /// JSON mirror: array of row objects, numeric cells parsed back to numbers.
    json to_json() const {
        json rows = json::array();
        for (const auto& r : rows_) {
            json row;
            for (std::size_t i = 0; i < header_.size(); ++i) {
                const std::string& cell = r[i];
                if (cell.empty()) { row[header_[i]] = nullptr; continue; }
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end && *end == '\0') row[header_[i]] = v;
                else if (cell == "true") row[header_[i]] = true;
                else if (cell == "false") row[header_[i]] = false;
                else row[header_[i]] = cell;
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

  private:
    static void write_line(std::ostringstream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace levylab
