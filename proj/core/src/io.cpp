#include "rspca/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rspca {

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file for reading: " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open file for writing: " + path);
    }
    return out;
}

double parse_double(std::istream& in, const std::string& path) {
    double x;
    if (!(in >> x)) {
        throw std::runtime_error("malformed number or premature end of file in " + path);
    }
    return x;
}

}  // namespace

std::string format_full_precision(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_sample_matrix(const std::string& path, const SampleMatrix& X) {
    auto out = open_output(path);
    out << X.d << ' ' << X.n << '\n';
    for (std::size_t i = 0; i < X.n; ++i) {
        for (std::size_t j = 0; j < X.d; ++j) {
            if (j) out << ' ';
            out << format_full_precision(X.at(i, j));
        }
        out << '\n';
    }
}

SampleMatrix read_sample_matrix(const std::string& path) {
    auto in = open_input(path);
    long d = 0, n = 0;
    if (!(in >> d >> n) || d < 1 || n < 1) {
        throw std::runtime_error("bad sample-matrix header (want: d n) in " + path);
    }
    SampleMatrix X;
    X.d = static_cast<std::size_t>(d);
    X.n = static_cast<std::size_t>(n);
    X.data.resize(X.n * X.d);
    for (std::size_t i = 0; i < X.n * X.d; ++i) X.data[i] = parse_double(in, path);
    return X;
}

void write_covariance(const std::string& path, const Covariance& S) {
    auto out = open_output(path);
    out << S.d << '\n';
    for (std::size_t i = 0; i < S.d; ++i) {
        for (std::size_t j = 0; j < S.d; ++j) {
            if (j) out << ' ';
            out << format_full_precision(S.at(i, j));
        }
        out << '\n';
    }
}

Covariance read_covariance(const std::string& path) {
    auto in = open_input(path);
    long d = 0;
    if (!(in >> d) || d < 1) {
        throw std::runtime_error("bad covariance header (want: d) in " + path);
    }
    Covariance S;
    S.d = static_cast<std::size_t>(d);
    S.entries.resize(S.d * S.d);
    for (std::size_t i = 0; i < S.d * S.d; ++i) S.entries[i] = parse_double(in, path);
    return S;
}

void write_sparse_vector(const std::string& path, const KSparseVector& v) {
    auto out = open_output(path);
    out << v.d << ' ' << v.support.size() << '\n';
    for (std::size_t t = 0; t < v.support.size(); ++t) {
        out << v.support[t] << ' ' << format_full_precision(v.values[t]) << '\n';
    }
}

KSparseVector read_sparse_vector(const std::string& path) {
    auto in = open_input(path);
    long d = 0, k = 0;
    if (!(in >> d >> k) || d < 1 || k < 0 || k > d) {
        throw std::runtime_error("bad sparse-vector header (want: d k) in " + path);
    }
    KSparseVector v;
    v.d = static_cast<std::size_t>(d);
    v.support.resize(static_cast<std::size_t>(k));
    v.values.resize(static_cast<std::size_t>(k));
    for (long t = 0; t < k; ++t) {
        long idx;
        if (!(in >> idx) || idx < 0 || idx >= d) {
            throw std::runtime_error("sparse-vector index out of range in " + path);
        }
        v.support[static_cast<std::size_t>(t)] = static_cast<std::size_t>(idx);
        v.values[static_cast<std::size_t>(t)] = parse_double(in, path);
    }
    return v;
}

}  // namespace rspca
