#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include "rspca/io.hpp"

using namespace rspca;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/rspca_io_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("sample matrix round-trips bit-exactly") {
    SampleMatrix X;
    X.n = 3;
    X.d = 2;
    X.data = {1.0 / 3.0, -2.5e-17, 1e300, -0.0, 3.141592653589793, 2.2250738585072014e-308};
    TempFile f("matrix.txt");
    write_sample_matrix(f.path, X);
    const SampleMatrix Y = read_sample_matrix(f.path);
    REQUIRE(Y.n == X.n);
    REQUIRE(Y.d == X.d);
    for (std::size_t i = 0; i < X.data.size(); ++i) CHECK(Y.data[i] == X.data[i]);
}

TEST_CASE("covariance round-trips bit-exactly") {
    Covariance S;
    S.d = 2;
    S.entries = {5.0 / 8.0, 0.21650635094610965, 0.21650635094610965, 3.0 / 8.0};
    TempFile f("cov.txt");
    write_covariance(f.path, S);
    const Covariance T = read_covariance(f.path);
    REQUIRE(T.d == 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(T.entries[i] == S.entries[i]);
}

TEST_CASE("sparse vector round-trips bit-exactly") {
    KSparseVector v;
    v.d = 10;
    v.support = {2, 5, 9};
    v.values = {0.5773502691896258, -0.5773502691896258, 0.5773502691896258};
    TempFile f("vec.txt");
    write_sparse_vector(f.path, v);
    const KSparseVector w = read_sparse_vector(f.path);
    REQUIRE(w.d == 10);
    REQUIRE(w.support == v.support);
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.values[i] == v.values[i]);
}

TEST_CASE("full-precision formatting survives a parse round-trip") {
    const double samples[] = {1.0 / 3.0, 0.1, 1e-323, 6.02214076e23, -1.7976931348623157e308};
    for (double x : samples) {
        const std::string s = format_full_precision(x);
        // strtod rather than stod: libstdc++'s stod raises out_of_range for
        // subnormals even though the conversion itself is exact.
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("malformed inputs raise") {
    TempFile f("bad.txt");
    {
        std::ofstream out(f.path);
        out << "2 2\n1.0 2.0\n";  // header promises 2 rows, provides 1
    }
    CHECK_THROWS_AS(read_sample_matrix(f.path), std::runtime_error);
    {
        std::ofstream out(f.path);
        out << "not a header\n";
    }
    CHECK_THROWS_AS(read_covariance(f.path), std::runtime_error);
    CHECK_THROWS_AS(read_sample_matrix("/tmp/rspca_io_test_does_not_exist"),
                    std::runtime_error);
}

TEST_CASE("sparse vector rejects out-of-range indices") {
    TempFile f("badvec.txt");
    {
        std::ofstream out(f.path);
        out << "3 1\n7 0.5\n";  // index 7 outside d = 3
    }
    CHECK_THROWS_AS(read_sparse_vector(f.path), std::runtime_error);
}

}  // TEST_SUITE
