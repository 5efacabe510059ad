#include <doctest.h>

#include "npp/digits.hpp"
#include "npp/train.hpp"

using namespace npp;

TEST_CASE("digit generator is deterministic and balanced") {
    DigitImages a = synth_digit_images(50, 123);
    DigitImages b = synth_digit_images(50, 123);
    CHECK(a.pixels == b.pixels);
    CHECK(a.labels == b.labels);

    std::size_t per_class[10] = {};
    for (auto l : a.labels) per_class[l]++;
    for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 5);

    DigitImages c = synth_digit_images(50, 124);
    CHECK(a.pixels != c.pixels);
}

TEST_CASE("digit images have ink where a digit should be") {
    DigitImages imgs = synth_digit_images(30, 9);
    for (std::size_t i = 0; i < imgs.count(); ++i) {
        const std::uint8_t* px = imgs.pixels.data() + i * 28 * 28;
        std::size_t bright = 0;
        for (std::size_t p = 0; p < 28 * 28; ++p) bright += px[p] > 128;
        CHECK(bright > 10);       // some stroke
        CHECK(bright < 28 * 28 / 2); // not a blob
    }
}

TEST_CASE("a small classifier separates the digit classes") {
    LabeledDataset train_set = digit_dataset(synth_digit_images(1500, 42), "train");
    LabeledDataset test_set = digit_dataset(synth_digit_images(300, 43), "test");
    Model m = make_mlp({1, 28, 28}, 64, 10, 42);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 3;
    cfg.seed = 42;
    Model trained = train(m, train_set, cfg);
    std::size_t ok = 0;
    for (const auto& s : test_set.samples) {
        ok += static_cast<int>(argmax(forward(trained, s.input))) == s.label;
    }
    CHECK(static_cast<double>(ok) / test_set.size() > 0.8);
}
