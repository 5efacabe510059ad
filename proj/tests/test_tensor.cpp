#include <doctest.h>

#include "npp/tensor.hpp"

using npp::Shape;
using npp::Tensor;

TEST_CASE("shape helpers") {
    CHECK(npp::shape_numel({2, 3, 4}) == 24);
    CHECK(npp::shape_str({1, 28, 28}) == "[1x28x28]");
    CHECK(npp::shape_numel({}) == 1);
}

TEST_CASE("tensor construction and indexing") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.numel() == 6);
    CHECK(t.at2(1, 2) == 1.5);
    t.at2(0, 1) = -2.0;
    CHECK(t[1] == -2.0);

    Tensor u({2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(u.at2(1, 0) == 3.0);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), npp::ShapeError);
}

TEST_CASE("reshape preserves data, rejects bad sizes") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    Tensor r = t.reshaped({6});
    CHECK(r[5] == 5.0);
    CHECK_THROWS_AS(t.reshaped({4}), npp::ShapeError);
}

TEST_CASE("finiteness and reductions") {
    Tensor t({3}, {1.0, -2.0, 3.0});
    CHECK(t.all_finite());
    CHECK(t.sum() == doctest::Approx(2.0));
    CHECK(t.abs_sum() == doctest::Approx(6.0));
    CHECK(t.max_abs() == doctest::Approx(3.0));
    t[1] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("same_bits distinguishes signed zero") {
    Tensor a({1}, {0.0});
    Tensor b({1}, {-0.0});
    CHECK_FALSE(a.same_bits(b));
    CHECK(a.same_bits(a));
}
