#pragma once

#include "hotgp/linalg.hpp"

#include <cstdint>
#include <iostream>
#include <string>

namespace hotgp::io {

// Little-endian binary primitives for checkpoints. Doubles are written
// bit-exact so restored runs continue identically.

void write_u64(std::ostream& os, std::uint64_t v);
void write_i64(std::ostream& os, std::int64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);
void write_vector(std::ostream& os, const Vector& v);
void write_matrix(std::ostream& os, const Matrix& m);

std::uint64_t read_u64(std::istream& is);
std::int64_t read_i64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
Vector read_vector(std::istream& is);
Matrix read_matrix(std::istream& is);

}  // namespace hotgp::io
