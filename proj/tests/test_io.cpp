#include "isac/matrix_io.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace isac;

TEST_CASE("complex matrix text round trip") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));

    std::stringstream ss;
    write_cmatrix(ss, m);
    const CMatrix back = read_cmatrix(ss);
    REQUIRE(back.rows() == 5);
    REQUIRE(back.cols() == 3);
    CHECK((back - m).norm() == 0.0);  // full precision text
}

TEST_CASE("beamformer file round trip") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Beamformer bf;
    bf.w_comm = CMatrix(4, 2);
    bf.w_sense = CMatrix(4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 2; ++j) bf.w_comm(i, j) = Complex(gauss(rng), gauss(rng));
        for (int j = 0; j < 4; ++j) bf.w_sense(i, j) = Complex(gauss(rng), gauss(rng));
    }
    std::stringstream ss;
    write_beamformer(ss, bf);
    const Beamformer back = read_beamformer(ss);
    CHECK((back.w_comm - bf.w_comm).norm() == 0.0);
    CHECK((back.w_sense - bf.w_sense).norm() == 0.0);
}

TEST_CASE("malformed beamformer input is rejected") {
    std::stringstream bad("not-a-beamformer v9\n");
    CHECK_THROWS(read_beamformer(bad));
    std::stringstream truncated("isacbf-beamformer v1\n4 2\n4 2\n0 0\n");
    CHECK_THROWS(read_beamformer(truncated));
    CHECK_THROWS(load_beamformer("/nonexistent/bf.txt"));
}
