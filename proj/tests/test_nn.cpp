#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "roadsound/errors.hpp"
#include "roadsound/nn/checkpoint.hpp"
#include "roadsound/nn/model.hpp"
#include "roadsound/nn/ops.hpp"
#include "roadsound/nn/train.hpp"
#include "roadsound/rng.hpp"

using namespace roadsound;

namespace {

template <typename T>
void fill_uniform(nn::Tensor<T>& t, std::mt19937_64& g, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = static_cast<T>(rng::uniform_in(g, lo, hi));
}

nn::ModelSpec make_spec(std::size_t rows, std::size_t cols, std::size_t channels,
                        std::size_t classes, std::vector<nn::LayerSpec> layers) {
    nn::ModelSpec s;
    s.input_rows = rows;
    s.input_cols = cols;
    s.input_channels = channels;
    s.n_classes = classes;
    s.layers = std::move(layers);
    return s;
}

constexpr nn::LayerSpec pool2() { return {nn::LayerKind::kMaxPool, 0, 3, 2, 2, false}; }

// Compares every analytic parameter gradient of a small double-precision
// network against central finite differences of the softmax cross-entropy
// loss, sampling up to ~20 entries per tensor.
struct GradCheckReport {
    double max_rel = 0.0;
    std::size_t checked = 0;
};

GradCheckReport check_network_gradients(const nn::ModelSpec& spec, std::size_t batch,
                                        std::uint64_t seed) {
    nn::Network<double> net(spec);
    net.init_parameters(seed);
    std::mt19937_64 g(seed * 7919 + 1);
    nn::Tensor<double> x({batch, spec.input_rows, spec.input_cols, spec.input_channels});
    fill_uniform(x, g);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % spec.n_classes);

    const std::function<double()> loss = [&]() {
        return nn::cross_entropy(nn::softmax(net.forward(x, true)), labels);
    };

    std::vector<nn::LayerCache<double>> caches;
    const nn::Tensor<double> probs = nn::softmax(net.forward(x, true, &caches));
    const auto grads = net.backward(nn::softmax_cross_entropy_grad(probs, labels), caches);

    auto params = net.parameters();
    GradCheckReport report;
    for (std::size_t t = 0; t < params.size(); ++t) {
        nn::Tensor<double>& p = *params[t];
        const std::size_t stride = std::max<std::size_t>(1, p.size() / 20);
        for (std::size_t j = 0; j < p.size(); j += stride) {
            const double fd = oracle::central_difference(loss, &p.data[j], 1e-5);
            const double a = grads[t].data[j];
            // The 1e-6 floor keeps finite-difference round-off noise from
            // dominating entries whose true gradient is zero (a conv bias
            // followed by batch norm has no effect on the loss).
            const double rel =
                std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-6);
            report.max_rel = std::max(report.max_rel, rel);
            ++report.checked;
        }
    }
    return report;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("conv2d matches the reference implementation") {
    std::mt19937_64 g(404);
    const std::vector<std::vector<std::size_t>> cases = {
        // n, h, w, c, k, f
        {2, 5, 7, 3, 3, 4}, {1, 4, 4, 1, 1, 2}, {2, 6, 5, 2, 5, 3}, {3, 9, 3, 4, 3, 1},
    };
    for (const auto& cs : cases) {
        nn::Tensor<double> input({cs[0], cs[1], cs[2], cs[3]});
        nn::Tensor<double> kernel({cs[4], cs[4], cs[3], cs[5]});
        nn::Tensor<double> bias({cs[5]});
        fill_uniform(input, g);
        fill_uniform(kernel, g);
        fill_uniform(bias, g);

        const auto fast = nn::conv2d_forward(input, kernel, bias);
        const auto slow = oracle::conv2d(input, kernel, bias);
        REQUIRE(fast.shape == slow.shape);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < fast.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(fast.data[i] - slow.data[i]));
        }
        CHECK(max_diff < 1e-12);
    }
}

TEST_CASE("conv2d rejects malformed arguments") {
    nn::Tensor<double> input({1, 4, 4, 2});
    nn::Tensor<double> even_kernel({2, 2, 2, 3});
    nn::Tensor<double> bias({3});
    CHECK_THROWS_AS(nn::conv2d_forward(input, even_kernel, bias), std::invalid_argument);
    nn::Tensor<double> wrong_c({3, 3, 5, 3});
    CHECK_THROWS_AS(nn::conv2d_forward(input, wrong_c, bias), std::invalid_argument);
    nn::Tensor<double> kernel({3, 3, 2, 3});
    nn::Tensor<double> wrong_bias({4});
    CHECK_THROWS_AS(nn::conv2d_forward(input, kernel, wrong_bias), std::invalid_argument);
}

TEST_CASE("conv2d gradients match finite differences directly") {
    std::mt19937_64 g(77);
    nn::Tensor<double> input({2, 4, 5, 2});
    nn::Tensor<double> kernel({3, 3, 2, 3});
    nn::Tensor<double> bias({3});
    nn::Tensor<double> weights({2, 4, 5, 3});  // fixed linear functional on the output
    fill_uniform(input, g);
    fill_uniform(kernel, g);
    fill_uniform(bias, g);
    fill_uniform(weights, g);

    const std::function<double()> loss = [&]() {
        const auto out = nn::conv2d_forward(input, kernel, bias);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data[i] * weights.data[i];
        return acc;
    };
    const auto grads = nn::conv2d_backward(weights, input, kernel);

    double max_rel = 0.0;
    auto track = [&](double analytic, double* slot) {
        const double fd = oracle::central_difference(loss, slot, 1e-6);
        max_rel = std::max(max_rel,
                           std::abs(analytic - fd) / std::max(std::abs(analytic) + std::abs(fd), 1e-8));
    };
    for (std::size_t j = 0; j < input.size(); j += 7) track(grads.input.data[j], &input.data[j]);
    for (std::size_t j = 0; j < kernel.size(); j += 5) track(grads.kernel.data[j], &kernel.data[j]);
    for (std::size_t j = 0; j < bias.size(); ++j) track(grads.bias.data[j], &bias.data[j]);
    CHECK(max_rel < 1e-7);
}

TEST_CASE("maxpool picks window maxima and reports shapes") {
    nn::Tensor<double> x({1, 4, 4, 1});
    for (std::size_t i = 0; i < 16; ++i) x.data[i] = static_cast<double>(i);
    const auto r = nn::maxpool_forward(x, 2, 2);
    CHECK(r.output.shape == std::vector<std::size_t>{1, 2, 2, 1});
    CHECK(r.output.data == std::vector<double>{5, 7, 13, 15});
    CHECK(r.argmax == std::vector<std::size_t>{5, 7, 13, 15});

    SUBCASE("partial edge windows are dropped") {
        nn::Tensor<double> y({1, 5, 5, 1});
        const auto q = nn::maxpool_forward(y, 2, 2);
        CHECK(q.output.dim(1) == 2);
        CHECK(q.output.dim(2) == 2);
    }
    SUBCASE("backward routes gradient only to the argmax positions") {
        nn::Tensor<double> go({1, 2, 2, 1});
        go.data = {1.0, 2.0, 3.0, 4.0};
        const auto gin = nn::maxpool_backward(go, r.argmax, x.shape);
        double total = 0.0;
        for (double v : gin.data) total += v;
        CHECK(total == 10.0);
        CHECK(gin.data[5] == 1.0);
        CHECK(gin.data[7] == 2.0);
        CHECK(gin.data[13] == 3.0);
        CHECK(gin.data[15] == 4.0);
        CHECK(gin.data[0] == 0.0);
    }
}

TEST_CASE("the default classifier's pooled shapes and parameter count") {
    const nn::ModelSpec spec = nn::default_model_spec(430, 128, 3, 5);
    const auto shapes = nn::trace_shapes(spec);
    REQUIRE(shapes.size() == 16);
    CHECK(shapes[0].rows == 143);
    CHECK(shapes[0].cols == 42);
    CHECK(shapes[3].rows == 47);
    CHECK(shapes[3].cols == 14);
    CHECK(shapes[7].rows == 15);
    CHECK(shapes[7].cols == 4);
    CHECK(shapes[11].channels == 256);
    CHECK(shapes[12].flat == 15360);
    CHECK(shapes[13].flat == 80);
    CHECK(shapes[14].flat == 40);
    CHECK(shapes[15].flat == 5);

    nn::Network<float> net(spec);
    CHECK(net.parameter_count() == 2378629);
    CHECK(net.parameters().size() == 24);
    const auto names = net.parameter_names();
    REQUIRE(names.size() == 24);
    CHECK(names.front() == "layer1.conv.weight");
    CHECK(names.back() == "layer15.dense.bias");
}

TEST_CASE("network construction rejects inconsistent stacks") {
    CHECK_THROWS_AS(
        nn::Network<float>(make_spec(8, 8, 1, 3,
                                     {nn::LayerSpec::flatten(), nn::LayerSpec::dense(3, true)})),
        std::invalid_argument);
    CHECK_THROWS_AS(nn::trace_shapes(make_spec(
                        8, 8, 1, 3, {nn::LayerSpec::flatten(), nn::LayerSpec::conv(4)})),
                    std::invalid_argument);
    CHECK_THROWS_AS(nn::trace_shapes(make_spec(2, 2, 1, 3, {nn::LayerSpec::maxpool()})),
                    std::invalid_argument);
}

TEST_CASE("batch norm normalizes in training and uses running stats in inference") {
    std::mt19937_64 g(31);
    nn::Tensor<double> x({6, 3});
    fill_uniform(x, g, -2.0, 2.0);
    nn::Tensor<double> gamma({3});
    nn::Tensor<double> beta({3});
    gamma.fill(1.0);
    std::vector<double> running_mean(3, 0.0), running_var(3, 1.0);
    nn::BatchNormCache<double> cache;

    const auto out = nn::batchnorm_forward(x, gamma, beta, true, running_mean, running_var,
                                           &cache);

    std::vector<double> mean(3, 0.0), var(3, 0.0);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 3; ++c) mean[c] += out.data[r * 3 + c] / 6.0;
    }
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = out.data[r * 3 + c] - mean[c];
            var[c] += d * d / 6.0;
        }
    }
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(mean[c]) < 1e-12);
        CHECK(var[c] == doctest::Approx(1.0).epsilon(1e-4));  // eps in the denominator
    }

    SUBCASE("running statistics blend with momentum 0.9") {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(running_mean[c] ==
                  doctest::Approx(0.1 * cache.batch_mean[c]).epsilon(1e-12));
            CHECK(running_var[c] ==
                  doctest::Approx(0.9 + 0.1 * cache.batch_var[c]).epsilon(1e-12));
        }
    }
    SUBCASE("inference mode applies the stored statistics") {
        nn::Tensor<double> one({1, 3});
        one.data = {0.5, -0.25, 2.0};
        std::vector<double> rm = {0.5, 0.0, 1.0};
        std::vector<double> rv = {4.0, 1.0, 0.25};
        nn::Tensor<double> g2({3});
        nn::Tensor<double> b2({3});
        g2.data = {2.0, 1.0, 1.0};
        b2.data = {0.5, 0.0, -1.0};
        const auto y = nn::batchnorm_forward(
            one, g2, b2, false, rm, rv, static_cast<nn::BatchNormCache<double>*>(nullptr));
        for (std::size_t c = 0; c < 3; ++c) {
            const double expect =
                g2.data[c] * (one.data[c] - rm[c]) / std::sqrt(rv[c] + 1e-5) + b2.data[c];
            CHECK(y.data[c] == doctest::Approx(expect).epsilon(1e-12));
        }
        CHECK(rm == std::vector<double>{0.5, 0.0, 1.0});  // untouched in inference
    }
    SUBCASE("training mode refuses a single-sample batch") {
        nn::Tensor<double> one({1, 3});
        CHECK_THROWS_AS(nn::batchnorm_forward(one, gamma, beta, true, running_mean, running_var,
                                              static_cast<nn::BatchNormCache<double>*>(nullptr)),
                        std::invalid_argument);
    }
}

TEST_CASE("dense layer computes x W + b") {
    nn::Tensor<double> x({2, 3});
    x.data = {1, 2, 3, 0, -1, 1};
    nn::Tensor<double> w({3, 2});
    w.data = {1, 0, 0, 1, 1, 1};
    nn::Tensor<double> b({2});
    b.data = {0.5, -0.5};
    const auto out = nn::dense_forward(x, w, b);
    CHECK(out.shape == std::vector<std::size_t>{2, 2});
    CHECK(out.data[0] == 4.5);
    CHECK(out.data[1] == 4.5);
    CHECK(out.data[2] == 1.5);
    CHECK(out.data[3] == -0.5);
}

TEST_CASE("softmax and cross-entropy behave per definition") {
    SUBCASE("rows sum to one and order is preserved") {
        std::mt19937_64 g(9);
        nn::Tensor<double> z({4, 6});
        fill_uniform(z, g, -5.0, 5.0);
        const auto p = nn::softmax(z);
        for (std::size_t r = 0; r < 4; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 6; ++c) sum += p.data[r * 6 + c];
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
    SUBCASE("a two-value pin") {
        nn::Tensor<double> z({1, 2});
        z.data = {0.0, std::log(2.0)};
        const auto p = nn::softmax(z);
        CHECK(p.data[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(p.data[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("perfect prediction has zero loss, uniform has log K") {
        nn::Tensor<double> one_hot({1, 3});
        one_hot.data = {0.0, 1.0, 0.0};
        CHECK(nn::cross_entropy(one_hot, {1}) == 0.0);
        nn::Tensor<double> uniform({1, 4});
        uniform.fill(0.25);
        CHECK(std::abs(nn::cross_entropy(uniform, {2}) - std::log(4.0)) < 1e-12);
    }
    SUBCASE("zero probability is clamped, not infinite") {
        nn::Tensor<double> p({1, 2});
        p.data = {1.0, 0.0};
        const double loss = nn::cross_entropy(p, {1});
        CHECK(std::isfinite(loss));
        CHECK(std::abs(loss + std::log(1e-12)) < 1e-9);
    }
    SUBCASE("the fused gradient equals finite differences of CE(softmax(z))") {
        std::mt19937_64 g(13);
        nn::Tensor<double> z({2, 4});
        fill_uniform(z, g, -2.0, 2.0);
        const std::vector<int> labels = {1, 3};
        const auto grad = nn::softmax_cross_entropy_grad(nn::softmax(z), labels);
        const std::function<double()> loss = [&]() {
            return nn::cross_entropy(nn::softmax(z), labels);
        };
        for (std::size_t j = 0; j < z.size(); ++j) {
            const double fd = oracle::central_difference(loss, &z.data[j], 1e-6);
            CHECK(std::abs(grad.data[j] - fd) < 1e-9);
        }
    }
}

TEST_CASE("full-network gradients match finite differences for every layer kind") {
    const std::vector<std::pair<nn::ModelSpec, std::size_t>> cases = {
        {make_spec(9, 8, 2, 4,
                   {nn::LayerSpec::conv(3), pool2(), nn::LayerSpec::batchnorm(),
                    nn::LayerSpec::conv(4), nn::LayerSpec::flatten(),
                    nn::LayerSpec::dense(6, true), nn::LayerSpec::dense(4, false)}),
         3},
        {make_spec(8, 8, 1, 3,
                   {pool2(), nn::LayerSpec::conv(5), nn::LayerSpec::batchnorm(),
                    nn::LayerSpec::flatten(), nn::LayerSpec::dense(5, true),
                    nn::LayerSpec::dense(3, false)}),
         2},
        {make_spec(7, 9, 3, 5,
                   {nn::LayerSpec::conv(2), nn::LayerSpec::batchnorm(),
                    nn::LayerSpec{nn::LayerKind::kMaxPool, 0, 3, 3, 2, false},
                    nn::LayerSpec::flatten(), nn::LayerSpec::dense(8, true),
                    nn::LayerSpec::dense(5, false)}),
         4},
        {make_spec(6, 6, 2, 4,
                   {nn::LayerSpec{nn::LayerKind::kConv, 4, 1, 3, 3, true},
                    nn::LayerSpec::maxpool(), nn::LayerSpec::batchnorm(),
                    nn::LayerSpec::flatten(), nn::LayerSpec::dense(5, true),
                    nn::LayerSpec::dense(4, false)}),
         3},
        {make_spec(10, 5, 1, 2,
                   {nn::LayerSpec::conv(3), nn::LayerSpec::maxpool(),
                    nn::LayerSpec::batchnorm(), nn::LayerSpec::flatten(),
                    nn::LayerSpec::dense(7, true), nn::LayerSpec::dense(2, false)}),
         2},
    };
    std::uint64_t seed = 11;
    for (const auto& [spec, batch] : cases) {
        const auto report = check_network_gradients(spec, batch, seed);
        CAPTURE(seed);
        CHECK(report.checked > 50);
        CHECK(report.max_rel < 1e-4);
        seed += 11;
    }
}

TEST_CASE("adam minimizes a quadratic") {
    nn::Tensor<double> w({1});
    w.data = {1.0};
    nn::AdamState<double> state;
    nn::AdamConfig config;
    config.lr = 0.1;

    nn::Tensor<double> grad({1});
    std::vector<nn::Tensor<double>*> params = {&w};
    grad.data = {2.0 * w.data[0]};
    std::vector<const nn::Tensor<double>*> grads = {&grad};
    nn::adam_step(params, grads, state, config);
    // First step moves by exactly lr since m_hat / sqrt(v_hat) = sign(g).
    CHECK(w.data[0] == doctest::Approx(0.9).epsilon(1e-6));

    for (int i = 0; i < 199; ++i) {
        grad.data = {2.0 * w.data[0]};
        nn::adam_step(params, grads, state, config);
    }
    CHECK(std::abs(w.data[0]) < 1e-2);
    CHECK(state.step == 200);
}

TEST_CASE("checkpoints round trip bitwise and reject corruption") {
    const std::filesystem::path dir = "scratch_nn";
    std::filesystem::create_directories(dir);

    const nn::ModelSpec spec = make_spec(
        12, 10, 3, 5,
        {nn::LayerSpec::conv(4), nn::LayerSpec::maxpool(), nn::LayerSpec::batchnorm(),
         nn::LayerSpec::flatten(), nn::LayerSpec::dense(6, true), nn::LayerSpec::dense(5, false)});
    nn::Network<float> net(spec);
    net.init_parameters(7);
    {   // move the running statistics off their initial values
        std::mt19937_64 g(8);
        nn::Tensor<float> x({2, 12, 10, 3});
        fill_uniform(x, g);
        net.forward(x, true);
    }
    nn::CheckpointMeta meta;
    meta.labels = {"crash", "horn", "siren", "skid", "urban"};
    meta.feature_config_hash = 0x00C0FFEE12345678ULL;
    meta.channel_mean = {0.25, -1.5, 3.0};
    meta.channel_std = {1.0, 0.5, 2.0};
    meta.seed = 42;

    const std::string path = (dir / "model.ckpt").string();
    nn::save_checkpoint(path, net, meta);
    auto loaded = nn::load_checkpoint(path);

    CHECK(loaded.meta.labels == meta.labels);
    CHECK(loaded.meta.feature_config_hash == meta.feature_config_hash);
    CHECK(loaded.meta.channel_mean == meta.channel_mean);
    CHECK(loaded.meta.channel_std == meta.channel_std);
    CHECK(loaded.meta.seed == meta.seed);
    REQUIRE(loaded.net.spec().layers.size() == spec.layers.size());

    auto original = net.parameters();
    auto restored = loaded.net.parameters();
    REQUIRE(original.size() == restored.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        REQUIRE(original[i]->shape == restored[i]->shape);
        CHECK(original[i]->data == restored[i]->data);  // bitwise for float
    }
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        CHECK(net.layers()[i].running_mean == loaded.net.layers()[i].running_mean);
        CHECK(net.layers()[i].running_var == loaded.net.layers()[i].running_var);
    }

    SUBCASE("a flipped byte fails the checksum") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        in.close();
        bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0xFF);
        const std::string bad = (dir / "corrupt.ckpt").string();
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(nn::load_checkpoint(bad), DecodeError);
    }
    SUBCASE("a truncated file is rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        in.close();
        bytes.resize(bytes.size() - 3);
        const std::string bad = (dir / "short.ckpt").string();
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(nn::load_checkpoint(bad), DecodeError);
    }
    SUBCASE("a missing file reports an I/O error") {
        CHECK_THROWS_AS(nn::load_checkpoint((dir / "absent.ckpt").string()), IoError);
    }
}

TEST_CASE("training learns a separable toy problem deterministically") {
    const nn::ModelSpec spec =
        make_spec(6, 6, 1, 3,
                  {nn::LayerSpec::flatten(), nn::LayerSpec::dense(8, true),
                   nn::LayerSpec::dense(3, false)});
    const std::size_t n = 30;
    nn::Tensor<float> inputs({n, 6, 6, 1});
    std::vector<int> labels(n);
    std::mt19937_64 g(123);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % 3);
        labels[i] = k;
        for (std::size_t j = 0; j < 36; ++j) {
            inputs.data[i * 36 + j] =
                static_cast<float>(-0.5 + 0.5 * k + rng::uniform_in(g, -0.05, 0.05));
        }
    }

    nn::TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs = 40;
    tc.learning_rate = 0.01;
    tc.patience = 40;
    tc.val_fraction = 0.2;
    tc.seed = 5;

    nn::Network<float> net(spec);
    net.init_parameters(tc.seed);
    const auto result = nn::train(net, inputs, labels, tc);

    REQUIRE(!result.history.empty());
    CHECK(result.history.size() <= tc.epochs);
    CHECK(result.best_epoch < result.history.size());
    CHECK(!result.aborted_on_nan);

    const auto predicted = nn::predict_labels(net, inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += predicted[i] == labels[i] ? 1 : 0;
    CHECK(static_cast<double>(correct) / static_cast<double>(n) >= 0.9);

    SUBCASE("probabilities are normalized") {
        const auto probs = nn::predict_probabilities(net, inputs);
        REQUIRE(probs.shape == std::vector<std::size_t>{n, 3});
        for (std::size_t i = 0; i < n; ++i) {
            float sum = 0.0f;
            for (std::size_t c = 0; c < 3; ++c) sum += probs.data[i * 3 + c];
            CHECK(std::abs(sum - 1.0f) < 1e-5f);
        }
    }
    SUBCASE("an identical seed reproduces the run exactly") {
        nn::Network<float> net2(spec);
        net2.init_parameters(tc.seed);
        const auto result2 = nn::train(net2, inputs, labels, tc);
        REQUIRE(result2.history.size() == result.history.size());
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            CHECK(result2.history[e].train_loss == result.history[e].train_loss);
            CHECK(result2.history[e].val_loss == result.history[e].val_loss);
            CHECK(result2.history[e].val_accuracy == result.history[e].val_accuracy);
        }
        auto p1 = net.parameters();
        auto p2 = net2.parameters();
        for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->data == p2[i]->data);
    }
}

TEST_CASE("stratified splits hit exact per-class counts") {
    std::vector<int> labels;
    for (int k = 0; k < 5; ++k) {
        for (int i = 0; i < 8; ++i) labels.push_back(k);
    }
    const auto split = nn::stratified_split(labels, 0.8, 3);
    CHECK(split.first.size() == 32);
    CHECK(split.second.size() == 8);

    std::vector<int> first_counts(5, 0), seen(40, 0);
    for (std::size_t idx : split.first) {
        first_counts[static_cast<std::size_t>(labels[idx])]++;
        seen[idx]++;
    }
    for (std::size_t idx : split.second) seen[idx]++;
    for (int c : seen) CHECK(c == 1);  // disjoint and covering
    // Largest-remainder apportionment: equal fractional parts resolve in
    // label order, so the first two classes give seven and the rest six.
    CHECK(first_counts == std::vector<int>{7, 7, 6, 6, 6});

    SUBCASE("uneven classes stay proportionally represented") {
        std::vector<int> mixed;
        for (int i = 0; i < 5; ++i) mixed.push_back(0);
        for (int i = 0; i < 6; ++i) mixed.push_back(1);
        for (int i = 0; i < 7; ++i) mixed.push_back(2);
        const auto s = nn::stratified_split(mixed, 0.7, 9);
        CHECK(s.first.size() == 13);  // llround(0.7 * 18)
        std::vector<int> counts(3, 0);
        for (std::size_t idx : s.first) counts[static_cast<std::size_t>(mixed[idx])]++;
        CHECK(counts == std::vector<int>{4, 4, 5});
    }
    SUBCASE("the same seed reproduces the split; another changes it") {
        const auto again = nn::stratified_split(labels, 0.8, 3);
        CHECK(again.first == split.first);
        CHECK(again.second == split.second);
        const auto other = nn::stratified_split(labels, 0.8, 4);
        CHECK(other.first != split.first);
    }
}

}  // TEST_SUITE
