#include <doctest.h>

#include <cmath>
#include <random>

#include "ddmodem/dd_transforms.hpp"
#include "support/reference.hpp"

using namespace ddmodem;

TEST_SUITE_BEGIN("dd_transforms");

TEST_CASE("qp_extend wraparound values") {
    DDFrame one(1, 1);
    one.at(0, 0) = {2.0, 1.0};
    // Doppler index wraps to 0 on a 1x1 grid, so no phase appears.
    CHECK(std::abs(qp_extend(one, 3, 5) - cplx{2.0, 1.0}) < 1e-15);

    DDFrame f(2, 2);
    f.at(0, 1) = 1.0;
    // One full delay period at Doppler 1 on a 2x2 grid flips the sign.
    CHECK(std::abs(qp_extend(f, 2, 1) - cplx{-1.0, 0.0}) < 1e-15);
    // Doppler axis is plainly periodic.
    CHECK(std::abs(qp_extend(f, 0, 3) - qp_extend(f, 0, 1)) < 1e-15);
    // Negative delay indices follow the same law.
    CHECK(std::abs(qp_extend(f, -2, 1) - cplx{-1.0, 0.0}) < 1e-15);
}

TEST_CASE("qp_extend shift law on random frames") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> shift(-3, 3);
    for (auto [m, n] : {std::pair{3, 5}, {8, 6}, {48, 1}, {1, 48}}) {
        DDFrame f = ref::random_frame(m, n, rng);
        for (int it = 0; it < 50; ++it) {
            long k = shift(rng), l = shift(rng);
            long a = shift(rng), b = shift(rng);
            cplx lhs = qp_extend(f, k + a * m, l + b * n);
            cplx rhs = qp_extend(f, k, l) *
                       ref::cis(ref::tau * static_cast<double>(a) * static_cast<double>(l) / n);
            CHECK(std::abs(lhs - rhs) < 1e-12);
        }
    }
}

TEST_CASE("idzt known frames") {
    DDFrame f(2, 2);
    f.at(0, 0) = 1.0;
    auto x = idzt(f);
    const double r = 1.0 / std::sqrt(2.0);
    REQUIRE(x.size() == 4);
    CHECK(std::abs(x[0] - r) < 1e-15);
    CHECK(std::abs(x[1]) < 1e-15);
    CHECK(std::abs(x[2] - r) < 1e-15);
    CHECK(std::abs(x[3]) < 1e-15);

    // All-ones row with one delay bin concentrates onto the first sample.
    DDFrame row(1, 8);
    for (int l = 0; l < 8; ++l) row.at(0, l) = 1.0;
    auto y = idzt(row);
    CHECK(std::abs(y[0] - std::sqrt(8.0)) < 1e-12);
    for (int t = 1; t < 8; ++t) CHECK(std::abs(y[t]) < 1e-12);
}

TEST_CASE("dzt known samples and round trip") {
    std::vector<cplx> x = {1.0, 0.0, 0.0, 0.0};
    DDFrame f = dzt(x, 2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(f.at(0, 0) - r) < 1e-15);
    CHECK(std::abs(f.at(0, 1) - r) < 1e-15);
    CHECK(std::abs(f.at(1, 0)) < 1e-15);
    CHECK(std::abs(f.at(1, 1)) < 1e-15);

    std::mt19937 rng(22);
    for (auto [m, n] : {std::pair{4, 12}, {12, 4}, {48, 1}, {1, 48}}) {
        DDFrame g = ref::random_frame(m, n, rng);
        CHECK(ref::rel_err(dzt(idzt(g), m, n), g) < 1e-12);
    }
}

TEST_CASE("dzt with one delay bin reduces to the DFT") {
    std::mt19937 rng(33);
    auto x = ref::random_vector(16, rng);
    DDFrame f = dzt(x, 1, 16);
    auto spec = ref::dft(x);
    for (int l = 0; l < 16; ++l) CHECK(std::abs(f.at(0, l) - spec[l]) < 1e-12);
}

TEST_CASE("idfzt known frames") {
    DDFrame f(2, 1);
    f.at(0, 0) = 1.0;
    auto s = idfzt(f);
    const double r = 1.0 / std::sqrt(2.0);
    REQUIRE(s.size() == 2);
    CHECK(std::abs(s[0] - r) < 1e-15);
    CHECK(std::abs(s[1] - r) < 1e-15);

    // One delay bin: the frame row is already the subcarrier vector.
    std::mt19937 rng(44);
    DDFrame row = ref::random_frame(1, 12, rng);
    auto t = idfzt(row);
    for (int i = 0; i < 12; ++i) CHECK(std::abs(t[i] - row.at(0, i)) < 1e-13);
}

TEST_CASE("fast paths match the direct sums") {
    std::mt19937 rng(55);
    for (auto [m, n] : {std::pair{6, 8}, {8, 6}, {48, 1}, {1, 48}, {16, 3}}) {
        DDFrame f = ref::random_frame(m, n, rng);
        CHECK(ref::rel_err(idzt(f), ref::idzt(f)) < 1e-12);
        CHECK(ref::rel_err(idfzt(f), ref::idfzt(f)) < 1e-12);
        auto x = ref::random_vector(m * n, rng);
        CHECK(ref::rel_err(dzt(x, m, n), ref::dzt(x, m, n)) < 1e-12);
        CHECK(ref::rel_err(dfzt(x, m, n), ref::dfzt(x, m, n)) < 1e-12);
    }
}

TEST_CASE("frequency synthesis is mn-periodic in the subcarrier index") {
    std::mt19937 rng(66);
    DDFrame f = ref::random_frame(6, 4, rng);
    for (long i : {0L, 3L, 17L}) {
        CHECK(std::abs(ref::idfzt_at(f, i) - ref::idfzt_at(f, i + 24)) < 1e-12);
        CHECK(std::abs(ref::idfzt_at(f, i) - ref::idfzt_at(f, i - 24)) < 1e-12);
    }
}

TEST_CASE("time synthesis factors through the frequency synthesis") {
    // idzt == idft o idfzt, and dzt == dfzt o dft, on every factorization.
    std::mt19937 rng(77);
    for (int k : {48, 60}) {
        for (auto [m, n] : ref::divisor_pairs(k)) {
            DDFrame f = ref::random_frame(m, n, rng);
            CHECK(ref::rel_err(idft(idfzt(f)), idzt(f)) < 1e-12);
            auto y = ref::random_vector(k, rng);
            CHECK(ref::rel_err(dfzt(dft(y), m, n), dzt(y, m, n)) < 1e-12);
        }
    }
}

TEST_CASE("all four transforms are unitary") {
    std::mt19937 rng(88);
    for (auto [m, n] : {std::pair{6, 8}, {48, 1}, {1, 48}}) {
        DDFrame f = ref::random_frame(m, n, rng);
        double nf = ref::norm(f.data);
        CHECK(std::abs(ref::norm(idzt(f)) - nf) < 1e-12 * nf);
        CHECK(std::abs(ref::norm(idfzt(f)) - nf) < 1e-12 * nf);
        auto x = ref::random_vector(m * n, rng);
        double nx = ref::norm(x);
        CHECK(std::abs(ref::norm(dzt(x, m, n).data) - nx) < 1e-12 * nx);
        CHECK(std::abs(ref::norm(dfzt(x, m, n).data) - nx) < 1e-12 * nx);
    }
}

TEST_CASE("unitary DFT against the quadratic oracle") {
    std::vector<cplx> delta = {1.0, 0.0, 0.0, 0.0};
    auto s = dft(delta);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(s[i] - 0.5) < 1e-15);

    std::mt19937 rng(99);
    for (int k : {5, 48, 97, 720}) {
        auto x = ref::random_vector(k, rng);
        CHECK(ref::rel_err(dft(x), ref::dft(x)) < 1e-12);
        CHECK(ref::rel_err(idft(x), ref::idft(x)) < 1e-12);
        CHECK(ref::rel_err(idft(dft(x)), x) < 1e-12);
    }
}

TEST_CASE("twisted convolution point actions") {
    DDFrame f(4, 3);
    f.at(0, 0) = 1.0;
    // Identity tap.
    CHECK(ref::rel_err(twisted_convolve({{0, 0, 1.0}}, f), f) < 1e-15);

    // Pure delay shift of a point at the origin picks up no phase.
    DDFrame g = twisted_convolve({{1, 0, 1.0}}, f);
    CHECK(std::abs(g.at(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(ref::norm(g.data) - 1.0) < 1e-15);

    // Doppler shift of a point at delay 2 multiplies by exp(j pi / 3).
    DDFrame h(4, 3);
    h.at(2, 0) = 1.0;
    DDFrame hd = twisted_convolve({{0, 1, 1.0}}, h);
    CHECK(std::abs(hd.at(2, 1) - ref::cis(ref::tau * 2.0 / 12.0)) < 1e-15);
}

TEST_CASE("twisted convolution output stays quasi-periodic") {
    std::mt19937 rng(123);
    std::uniform_int_distribution<int> ks(-2, 5), ls(-2, 5), sh(-2, 2);
    DDFrame f = ref::random_frame(6, 8, rng);
    DDTapList taps;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 5; ++i) taps.push_back({ks(rng), ls(rng), {u(rng), u(rng)}});
    DDFrame out = twisted_convolve(taps, f);
    for (int it = 0; it < 40; ++it) {
        long k = ks(rng), l = ls(rng), a = sh(rng), b = sh(rng);
        cplx lhs = qp_extend(out, k + a * 6, l + b * 8);
        cplx rhs = qp_extend(out, k, l) * ref::cis(ref::tau * a * static_cast<double>(l) / 8.0);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("tap cascade matches nested twisted convolution") {
    std::mt19937 rng(321);
    std::uniform_int_distribution<int> ks(-3, 6), ls(-3, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        DDFrame f = ref::random_frame(8, 6, rng);
        DDTapList a, b;
        for (int i = 0; i < 4; ++i) a.push_back({ks(rng), ls(rng), {u(rng), u(rng)}});
        for (int i = 0; i < 4; ++i) b.push_back({ks(rng), ls(rng), {u(rng), u(rng)}});
        DDFrame nested = twisted_convolve(a, twisted_convolve(b, f));
        DDFrame flat = twisted_convolve(twisted_compose(a, b, 48), f);
        CHECK(ref::rel_err(flat, nested) < 1e-10);
    }
}

TEST_SUITE_END();
