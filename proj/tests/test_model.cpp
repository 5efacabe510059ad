#include <doctest.h>

#include "npp/model.hpp"
#include "oracles.hpp"

using namespace npp;

TEST_CASE("dense identity layer passes input through") {
    Model m;
    m.input_shape = {3};
    m.class_count = 3;
    Dense d{Tensor({3, 3}), Tensor({3})};
    for (std::size_t i = 0; i < 3; ++i) d.weight.at2(i, i) = 1.0;
    m.layers.push_back(std::move(d));
    Tensor x({3}, {1.0, 2.0, 3.0});
    Tensor y = forward(m, x);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);
}

TEST_CASE("relu clamps negatives") {
    Tensor x({3}, {-1.0, 0.0, 2.0});
    Tensor y = forward_layer(ReLU{}, x);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.0);
}

TEST_CASE("forward matches naive nested-loop oracle on random nets") {
    Rng rng(20240811);
    for (int trial = 0; trial < 100; ++trial) {
        Model m = oracle::random_dense_model(rng, 2, 32, 2);
        Tensor x = oracle::random_input(rng, m.input_shape);
        Tensor logits = forward(m, x);
        auto acts = oracle::naive_forward(oracle::extract_dense_net(m, x));
        REQUIRE(acts.back().size() == logits.numel());
        for (std::size_t i = 0; i < logits.numel(); ++i) {
            CHECK(std::fabs(logits[i] - acts.back()[i]) < 1e-12);
        }
    }
}

TEST_CASE("forward is deterministic") {
    Rng rng(7);
    Model m = oracle::random_dense_model(rng);
    Tensor x = oracle::random_input(rng, m.input_shape);
    Tensor a = forward(m, x);
    Tensor b = forward(m, x);
    CHECK(a.same_bits(b));
}

TEST_CASE("forward_with_trace: logits bitwise equal, one entry per layer") {
    Rng rng(11);
    Model m = oracle::random_dense_model(rng, 2, 16, 2);
    Tensor x = oracle::random_input(rng, m.input_shape);
    auto [logits, trace] = forward_with_trace(m, x);
    CHECK(trace.entries.size() == m.layers.size());
    CHECK(logits.same_bits(forward(m, x)));
    for (std::size_t i = 0; i + 1 < trace.entries.size(); ++i) {
        CHECK(trace.entries[i + 1].input.same_bits(trace.entries[i].output));
    }
}

TEST_CASE("trace of identity dense records input as output") {
    Model m;
    m.input_shape = {2};
    m.class_count = 2;
    Dense d{Tensor({2, 2}), Tensor({2})};
    d.weight.at2(0, 0) = 1.0;
    d.weight.at2(1, 1) = 1.0;
    m.layers.push_back(ReLU{});
    m.layers.push_back(std::move(d));
    Tensor x({2}, {1.0, 2.0});
    auto [logits, trace] = forward_with_trace(m, x);
    CHECK(trace.entries.back().output.same_bits(logits));
    CHECK(logits[0] == 1.0);
    CHECK(logits[1] == 2.0);
}

TEST_CASE("shape mismatch names the layer and both shapes") {
    Model m = make_mlp({1, 4, 4}, 8, 3, 1);
    Tensor bad({1, 5, 5}, 0.1);
    try {
        forward(m, bad);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("layer 0") != std::string::npos);
        CHECK(msg.find("[1x4x4]") != std::string::npos);
        CHECK(msg.find("[1x5x5]") != std::string::npos);
    }
}

TEST_CASE("model validation catches bad stacks") {
    Model m;
    m.input_shape = {4};
    m.class_count = 3;
    SUBCASE("no layers") { CHECK_THROWS_AS(validate_model(m), ShapeError); }
    SUBCASE("wrong logit count") {
        Rng rng(3);
        m.layers.push_back(make_dense(rng, 4, 5));
        m.layers.push_back(ReLU{});
        m.layers.push_back(make_dense(rng, 5, 2)); // class_count says 3
        CHECK_THROWS_AS(validate_model(m), ShapeError);
    }
    SUBCASE("no dense before output") {
        Rng rng(3);
        // the only dense IS the output layer, so no perturbation target exists
        m.layers.push_back(ReLU{});
        m.layers.push_back(make_dense(rng, 4, 3));
        CHECK_THROWS_AS(validate_model(m), ShapeError);
    }
}

TEST_CASE("conv + pool stack composes and runs") {
    Model m = make_allcnn({1, 28, 28}, 32, 10, 99);
    Tensor x({1, 28, 28}, 0.25);
    Tensor logits = forward(m, x);
    CHECK(logits.numel() == 10);
    CHECK(logits.all_finite());
}

TEST_CASE("maxpool takes window maxima") {
    Tensor x({1, 2, 2}, {1.0, 5.0, 3.0, 2.0});
    Tensor y = forward_layer(MaxPool2D{2, 2}, x);
    CHECK(y.numel() == 1);
    CHECK(y[0] == 5.0);
}

TEST_CASE("conv2d matches hand computation") {
    Conv2D c{Tensor({1, 1, 2, 2}, {1.0, 0.0, 0.0, 1.0}), Tensor({1}, {0.5}), 1, 0};
    Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor y = forward_conv2d(c, x);
    // each output = x[y][x] + x[y+1][x+1] + 0.5
    CHECK(y.at3(0, 0, 0) == doctest::Approx(1 + 5 + 0.5));
    CHECK(y.at3(0, 0, 1) == doctest::Approx(2 + 6 + 0.5));
    CHECK(y.at3(0, 1, 0) == doctest::Approx(4 + 8 + 0.5));
    CHECK(y.at3(0, 1, 1) == doctest::Approx(5 + 9 + 0.5));
}
