#pragma once

// Text serialization for sample matrices, covariance matrices, and sparse
// truth vectors. All floats are written with 17 significant digits so that
// write -> read round-trips are bit-exact.
//
// Formats:
//   sample matrix:   line 1 "d n", then n rows of d values
//   covariance:      line 1 "d",   then d rows of d values
//   sparse vector:   line 1 "d k", then k lines "index value"

#include <string>

#include "rspca/linalg.hpp"

namespace rspca {

void write_sample_matrix(const std::string& path, const SampleMatrix& X);
SampleMatrix read_sample_matrix(const std::string& path);

void write_covariance(const std::string& path, const Covariance& S);
Covariance read_covariance(const std::string& path);

void write_sparse_vector(const std::string& path, const KSparseVector& v);
KSparseVector read_sparse_vector(const std::string& path);

// Formats one double with 17 significant digits (shortest form that
// round-trips IEEE-754 binary64).
std::string format_full_precision(double x);

}  // namespace rspca
