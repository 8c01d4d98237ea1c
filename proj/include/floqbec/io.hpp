#ifndef FLOQBEC_IO_HPP
#define FLOQBEC_IO_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace floqbec {

namespace io {

/// Shortest digit string that round-trips a double ("%.17g"), so identical
/// values always serialize to identical bytes.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of everything that determines the numbers in an output file
/// (config echo + seed + subcommand); wall time and thread count excluded.
inline std::string manifest_hash(const std::map<std::string, std::string>& config_echo,
                                 std::uint64_t seed, const std::string& subcommand) {
    std::string canon = subcommand + "\x1f" + std::to_string(seed) + "\x1f";
    for (const auto& [k, v] : config_echo) canon += k + "\x1e" + v + "\x1f";
    return hex64(fnv1a64(canon));
}

class CsvFile {
public:
    explicit CsvFile(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }
    void comment(const std::string& line) { out_ << "# " << line << "\n"; }
    void header(const std::string& columns) { out_ << columns << "\n"; }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out_ << ",";
            out_ << fmt(vals[i]);
        }
        out_ << "\n";
    }
    void row_with_label(const std::vector<double>& vals, const std::string& label) {
        for (const double v : vals) out_ << fmt(v) << ",";
        out_ << label << "\n";
    }

private:
    std::ofstream out_;
};

}  // namespace io

}  // namespace floqbec

#endif
