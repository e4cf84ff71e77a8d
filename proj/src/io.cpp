#include "featfilter/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "featfilter/tensor.hpp"

namespace fs = std::filesystem;

namespace ff {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw std::runtime_error("read error on " + path);
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out.good()) throw std::runtime_error("write error on " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string fmt_double(double v) {
    // shortest representation that parses back to the same double
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string path_join(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return (fs::path(a) / b).string();
}

void save_pgm(const std::string& path, const LabelMap& labels, int num_classes) {
    if (num_classes < 2 || num_classes > 256)
        throw std::invalid_argument("save_pgm: num_classes out of range");
    std::string buf = "P5\n" + std::to_string(labels.width()) + " " +
                      std::to_string(labels.height()) + "\n" + std::to_string(num_classes - 1) + "\n";
    for (int v : labels.values()) {
        if (v < 0 || v >= num_classes)
            throw std::invalid_argument("save_pgm: label " + std::to_string(v) + " out of range");
        buf.push_back(static_cast<char>(v));
    }
    write_file_atomic(path, buf);
}

LabelMap load_pgm(const std::string& path) {
    const std::string buf = read_file(path);
    std::istringstream in(buf);
    std::string magic;
    std::size_t w = 0, h = 0;
    int maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || !in || w == 0 || h == 0 || maxval < 1 || maxval > 255)
        throw std::runtime_error("load_pgm: " + path + ": unsupported header");
    in.get();  // single whitespace after maxval
    const std::size_t off = static_cast<std::size_t>(in.tellg());
    if (buf.size() != off + w * h) throw std::runtime_error("load_pgm: " + path + ": truncated");
    LabelMap m(h, w);
    for (std::size_t i = 0; i < w * h; ++i)
        m.values()[i] = static_cast<unsigned char>(buf[off + i]);
    return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace ff
