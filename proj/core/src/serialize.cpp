#include "hotgp/serialize.hpp"

#include <cstring>
#include <stdexcept>

namespace hotgp::io {

namespace {
void write_raw(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw std::runtime_error("serialize: write failed");
}

void read_raw(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("serialize: read failed (truncated stream?)");
}
}  // namespace

void write_u64(std::ostream& os, std::uint64_t v) { write_raw(os, &v, sizeof v); }
void write_i64(std::ostream& os, std::int64_t v) { write_raw(os, &v, sizeof v); }
void write_f64(std::ostream& os, double v) { write_raw(os, &v, sizeof v); }

void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    write_raw(os, s.data(), s.size());
}

void write_vector(std::ostream& os, const Vector& v) {
    write_u64(os, static_cast<std::uint64_t>(v.size()));
    if (v.size() > 0) write_raw(os, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void write_matrix(std::ostream& os, const Matrix& m) {
    write_u64(os, static_cast<std::uint64_t>(m.rows()));
    write_u64(os, static_cast<std::uint64_t>(m.cols()));
    if (m.size() > 0) write_raw(os, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    read_raw(is, &v, sizeof v);
    return v;
}

std::int64_t read_i64(std::istream& is) {
    std::int64_t v = 0;
    read_raw(is, &v, sizeof v);
    return v;
}

double read_f64(std::istream& is) {
    double v = 0;
    read_raw(is, &v, sizeof v);
    return v;
}

std::string read_string(std::istream& is) {
    const auto n = read_u64(is);
    std::string s(n, '\0');
    read_raw(is, s.data(), n);
    return s;
}

Vector read_vector(std::istream& is) {
    const auto n = read_u64(is);
    Vector v(static_cast<Eigen::Index>(n));
    if (n > 0) read_raw(is, v.data(), sizeof(double) * n);
    return v;
}

Matrix read_matrix(std::istream& is) {
    const auto r = read_u64(is);
    const auto c = read_u64(is);
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (r * c > 0) read_raw(is, m.data(), sizeof(double) * r * c);
    return m;
}

}  // namespace hotgp::io
