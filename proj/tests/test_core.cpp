#include "helpers.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/ops.hpp"

#include <doctest.h>

using namespace normlab;
using testing::random_tensor;

namespace {

// Independent nested-loop oracle for reduce_mean_var.
MeanVar loop_mean_var(const Tensor4 &x, bool rn, bool rc, bool rh, bool rw) {
    const Shape4 s = x.shape();
    const Shape4 o{rn ? 1 : s.n, rc ? 1 : s.c, rh ? 1 : s.h, rw ? 1 : s.w};
    MeanVar r{Tensor4(o), Tensor4(o)};
    for (std::size_t a = 0; a < o.n; ++a)
        for (std::size_t b = 0; b < o.c; ++b)
            for (std::size_t c = 0; c < o.h; ++c)
                for (std::size_t d = 0; d < o.w; ++d) {
                    double sum = 0.0, count = 0.0;
                    for (std::size_t n = 0; n < s.n; ++n)
                        for (std::size_t ch = 0; ch < s.c; ++ch)
                            for (std::size_t h = 0; h < s.h; ++h)
                                for (std::size_t w = 0; w < s.w; ++w) {
                                    if ((!rn && n != a) || (!rc && ch != b) || (!rh && h != c) ||
                                        (!rw && w != d))
                                        continue;
                                    sum += x(n, ch, h, w);
                                    count += 1.0;
                                }
                    const double mean = sum / count;
                    double sq = 0.0;
                    for (std::size_t n = 0; n < s.n; ++n)
                        for (std::size_t ch = 0; ch < s.c; ++ch)
                            for (std::size_t h = 0; h < s.h; ++h)
                                for (std::size_t w = 0; w < s.w; ++w) {
                                    if ((!rn && n != a) || (!rc && ch != b) || (!rh && h != c) ||
                                        (!rw && w != d))
                                        continue;
                                    sq += (x(n, ch, h, w) - mean) * (x(n, ch, h, w) - mean);
                                }
                    r.mean(a, b, c, d) = mean;
                    r.var(a, b, c, d) = sq / count;
                }
    return r;
}

double max_rel(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    return m;
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("tensor storage and shape checks") {
    Tensor4 t({2, 3, 4, 5});
    CHECK(t.size() == 120);
    t(1, 2, 3, 4) = 7.0;
    CHECK(t.data().back() == 7.0);
    CHECK(t.plane(1, 2).size() == 20);
    CHECK_THROWS_AS(Tensor4({1, 1, 2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(AxisSet({}), ShapeError);
    CHECK_THROWS_AS((void)t.reshaped({1, 1, 1, 7}), ShapeError);
}

TEST_CASE("constant input has its value as mean and zero variance") {
    Tensor4 x({2, 3, 4, 4}, 5.0);
    auto mv = reduce_mean_var(x, {Axis::N, Axis::H, Axis::W});
    CHECK(mv.mean.shape() == Shape4{1, 3, 1, 1});
    for (double m : mv.mean.data()) CHECK(m == 5.0);
    for (double v : mv.var.data()) CHECK(v == 0.0);
}

TEST_CASE("four values over H and W") {
    Tensor4 x({1, 1, 2, 2}, {1, 2, 3, 4});
    auto mv = reduce_mean_var(x, {Axis::H, Axis::W});
    CHECK(mv.mean.data()[0] == 2.5);
    CHECK(mv.var.data()[0] == 1.25);
}

TEST_CASE("every axis subset matches the loop oracle") {
    const Tensor4 x = random_tensor({2, 3, 4, 4}, 11, 2.0, 0.5);
    for (unsigned bits = 1; bits < 16; ++bits) {
        const bool rn = bits & 1, rc = bits & 2, rh = bits & 4, rw = bits & 8;
        std::vector<Axis> list;
        if (rn) list.push_back(Axis::N);
        if (rc) list.push_back(Axis::C);
        if (rh) list.push_back(Axis::H);
        if (rw) list.push_back(Axis::W);
        AxisSet axes = list.size() == 1   ? AxisSet{list[0]}
                       : list.size() == 2 ? AxisSet{list[0], list[1]}
                       : list.size() == 3 ? AxisSet{list[0], list[1], list[2]}
                                          : AxisSet{list[0], list[1], list[2], list[3]};
        CAPTURE(bits);
        const auto got = reduce_mean_var(x, axes);
        const auto want = loop_mean_var(x, rn, rc, rh, rw);
        REQUIRE(got.mean.shape() == want.mean.shape());
        CHECK(max_rel(got.mean.data(), want.mean.data()) <= 1e-12);
        CHECK(max_rel(got.var.data(), want.var.data()) <= 1e-12);
        for (double v : got.var.data()) CHECK(v >= 0.0);
    }
}

TEST_CASE("empty reduction is a shape error") {
    Tensor4 x({0, 3, 2, 2});
    CHECK_THROWS_AS(reduce_mean_var(x, {Axis::N}), ShapeError);
}

TEST_CASE("broadcast divide by a scalar") {
    Tensor4 x({1, 1, 1, 2}, {4, 6});
    Tensor4 two({1, 1, 1, 1}, 2.0);
    auto y = broadcast_apply(x, two, BroadcastOp::Div);
    CHECK(y.data()[0] == 2.0);
    CHECK(y.data()[1] == 3.0);
}

TEST_CASE("subtracting zero leaves x unchanged") {
    const Tensor4 x = random_tensor({2, 3, 3, 2}, 3);
    CHECK(broadcast_apply(x, Tensor4({1, 3, 1, 1}), BroadcastOp::Sub) == x);
    CHECK(broadcast_apply(x, Tensor4({2, 1, 3, 1}), BroadcastOp::Sub) == x);
}

TEST_CASE("broadcast ops match a loop oracle") {
    const Tensor4 x = random_tensor({2, 3, 4, 5}, 5);
    const Shape4 stat_shapes[] = {{1, 3, 1, 1}, {2, 1, 1, 1}, {1, 1, 4, 5}, {2, 3, 1, 5}, {2, 3, 4, 5}};
    for (const Shape4 &ss : stat_shapes) {
        const Tensor4 stat = random_tensor(ss, 9, 1.0, 3.0);
        for (BroadcastOp op : {BroadcastOp::Sub, BroadcastOp::Div, BroadcastOp::Mul, BroadcastOp::Add}) {
            const Tensor4 got = broadcast_apply(x, stat, op);
            Tensor4 want(x.shape());
            for (std::size_t n = 0; n < 2; ++n)
                for (std::size_t c = 0; c < 3; ++c)
                    for (std::size_t h = 0; h < 4; ++h)
                        for (std::size_t w = 0; w < 5; ++w) {
                            const double a = x(n, c, h, w);
                            const double b = stat(ss.n == 1 ? 0 : n, ss.c == 1 ? 0 : c,
                                                  ss.h == 1 ? 0 : h, ss.w == 1 ? 0 : w);
                            want(n, c, h, w) = op == BroadcastOp::Sub   ? a - b
                                               : op == BroadcastOp::Div ? a / b
                                               : op == BroadcastOp::Mul ? a * b
                                                                        : a + b;
                        }
            CHECK(max_rel(got.data(), want.data()) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(broadcast_apply(x, Tensor4({1, 2, 1, 1}), BroadcastOp::Add), ShapeError);
}

TEST_CASE("groups are contiguous channel blocks") {
    Tensor4 x({1, 4, 1, 1}, {10, 11, 12, 13});
    GroupedView two(x, 2);
    CHECK(two.channel(0, 0) == 0);
    CHECK(two.channel(0, 1) == 1);
    CHECK(two.channel(1, 0) == 2);
    CHECK(two.channel(1, 1) == 3);
    CHECK(two(0, 1, 0, 0, 0) == 12.0);

    GroupedView one(x, 1);
    CHECK(one.group_size() == 4);
    GroupedView per_channel(x, 4);
    CHECK(per_channel.channels_per_group() == 1);
    CHECK(per_channel.group(0, 3)[0] == 13.0);
}

TEST_CASE("indivisible channel count is a configuration error") {
    Tensor4 x({1, 6, 2, 2});
    CHECK_THROWS_AS(GroupedView(x, 4), ConfigError);
    CHECK_THROWS_AS(GroupedView(x, 0), ConfigError);
    CHECK_THROWS_AS(to_grouped(x, 4), ConfigError);
}

TEST_CASE("grouping round-trips bit-exactly") {
    const Tensor4 x = random_tensor({3, 8, 3, 5}, 21);
    for (std::size_t g : {1, 2, 4, 8}) {
        const Tensor4 grouped = to_grouped(x, g);
        CHECK(grouped.shape() == Shape4{3, g, 8 / g, 15});
        CHECK(from_grouped(grouped, x.shape()) == x);
    }
}

TEST_CASE("seed mixing and rng are reproducible") {
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    Rng r(3);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.below(7);
        CHECK(v < 7);
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
    }
}

}
