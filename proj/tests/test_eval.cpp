#include "doctest.h"

#include <random>
#include <set>

#include "support/golden.hpp"
#include "support/oracles.hpp"
#include "veriflow/error.hpp"
#include "veriflow/eval.hpp"

using namespace veriflow;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

std::vector<ManifestEntry> synthetic(std::size_t real, std::size_t fake) {
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < real + fake; ++i) {
        ManifestEntry e;
        e.video_id = "v" + std::to_string(i);
        e.label = i < real ? Label::Real : Label::Fake;
        e.precomputed = PrecomputedInput{"", {}};
        out.push_back(e);
    }
    return out;
}

std::size_t count(const std::vector<ManifestEntry>& v, Label l) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const ManifestEntry& e) { return e.label == l; }));
}

const golden::Scenario& scenario() {
    static const golden::Scenario s = golden::build_scenario();
    return s;
}

}  // namespace

TEST_CASE("manifest parsing") {
    const auto entries = parse_manifest(
        "{\"video_id\":\"a\",\"label\":\"fake\",\"media_locator\":\"x.mp4\",\"source_url\":\"https://s\"}\n"
        "\n"
        "{\"video_id\":\"b\",\"label\":\"Real\",\"precomputed\":{\"transcript\":\"hi\",\"people\":[\"Ann\"]}}\n");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].label == Label::Fake);
    CHECK(entries[0].source_url == "https://s");
    REQUIRE(entries[1].precomputed.has_value());
    CHECK(entries[1].precomputed->people == std::vector<std::string>{"Ann"});

    CHECK(code_of([] { parse_manifest("{\"video_id\":\"a\",\"label\":\"fake\",\"media_locator\":\"x\"}\n"
                                      "{\"video_id\":\"a\",\"label\":\"real\",\"media_locator\":\"y\"}"); }) ==
          ErrorCode::DuplicateVideoId);
    CHECK(code_of([] { parse_manifest("{\"video_id\":\"a\",\"label\":\"fake\"}"); }) == ErrorCode::ManifestSchemaError);
    CHECK(code_of([] { parse_manifest("{\"video_id\":\"a\",\"label\":\"odd\",\"media_locator\":\"x\"}"); }) ==
          ErrorCode::ManifestSchemaError);
    CHECK(code_of([] { parse_manifest("{\"video_id\":\"a\",\"label\":\"fake\",\"media_locator\":\"x\",\"extra\":1}"); }) ==
          ErrorCode::ManifestSchemaError);
    CHECK(code_of([] { parse_manifest("not json"); }) == ErrorCode::ManifestSchemaError);
}

TEST_CASE("stratified split counts and determinism") {
    const auto entries = synthetic(1071, 1055);
    const auto a = stratified_split(entries, 0.1, 42);
    CHECK(count(a.test, Label::Real) == 107);
    CHECK(count(a.test, Label::Fake) == 106);
    CHECK(a.train.size() + a.test.size() == entries.size());
    const auto b = stratified_split(entries, 0.1, 42);
    CHECK(a.test == b.test);
    CHECK(a.train == b.train);
    const auto c = stratified_split(entries, 0.1, 43);
    CHECK(c.test != a.test);
    std::set<std::string> test_ids;
    for (const auto& e : a.test) test_ids.insert(e.video_id);
    for (const auto& e : a.train) CHECK(test_ids.count(e.video_id) == 0);

    CHECK(code_of([&] { stratified_split(synthetic(5, 0), 0.5, 1); }) == ErrorCode::ClassMissing);
    CHECK(code_of([&] { stratified_split(entries, 1.0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("split class counts match the rounding oracle") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> n(1, 300);
    std::uniform_real_distribution<double> f(0.01, 0.99);
    for (int i = 0; i < 100; ++i) {
        const std::size_t real = n(rng), fake = n(rng);
        const double frac = f(rng);
        const auto s = stratified_split(synthetic(real, fake), frac, i);
        CHECK(count(s.test, Label::Real) == static_cast<std::size_t>(std::lround(frac * double(real))));
        CHECK(count(s.test, Label::Fake) == static_cast<std::size_t>(std::lround(frac * double(fake))));
    }
}

TEST_CASE("metrics equal a brute-force recount") {
    std::mt19937_64 rng(1000);
    std::uniform_int_distribution<std::size_t> cell(0, 40);
    std::bernoulli_distribution zero(0.2);
    int checked = 0;
    while (checked < 1000) {
        ConfusionMatrix c{zero(rng) ? 0 : cell(rng), zero(rng) ? 0 : cell(rng), zero(rng) ? 0 : cell(rng),
                          zero(rng) ? 0 : cell(rng)};
        if (c.total() == 0) continue;
        CHECK(compute_metrics(c) == oracle::recount(c));
        ++checked;
    }
    CHECK(code_of([] { compute_metrics({}); }) == ErrorCode::EmptyEvaluation);
}

TEST_CASE("metrics hand cases") {
    const auto m = compute_metrics({9, 1, 9, 1});
    CHECK(m.accuracy == doctest::Approx(0.90));
    CHECK(m.f1 == doctest::Approx(0.90));
    CHECK(m.undefined.empty());

    // always predicts real: tp=1 fp=0 tn=100 fn=99
    const auto d = compute_metrics({1, 0, 100, 99});
    CHECK(d.fpr == 0.0);
    CHECK(d.fnr == doctest::Approx(0.99));

    const auto none = compute_metrics({0, 0, 5, 0});
    CHECK(none.undefined == std::vector<std::string>{"precision", "recall", "f1", "fnr"});
    CHECK(none.precision == 0.0);
}

TEST_CASE("confusion from rows skips errors") {
    std::vector<PerVideoRow> rows = {{"a", Label::Fake, Label::Fake, 0.9, std::nullopt},
                                     {"b", Label::Real, Label::Fake, 0.7, std::nullopt},
                                     {"c", Label::Real, Label::Real, 0.1, std::nullopt},
                                     {"d", Label::Fake, Label::Real, 0.2, std::nullopt},
                                     {"e", Label::Fake, std::nullopt, std::nullopt, "LlmUnavailable: x"}};
    CHECK(confusion_from_rows(rows) == ConfusionMatrix{1, 1, 1, 1});
}

TEST_CASE("results table") {
    CHECK(format_results_table({{"DeepSeek R-1 Llama 8B", 0.904, 0.93}}) ==
          "Model/Config | Accuracy (%) | F1-Score\nDeepSeek R-1 Llama 8B | 90.4 | 0.93\n");
    CHECK(format_results_row({"x", 1.0, 1.0}) == "x | 100.0 | 1.00");
}

TEST_CASE("golden suite scores perfectly") {
    const auto& s = scenario();
    REQUIRE(s.manifest.size() == 20);
    const auto report = evaluate(golden::make_pipeline(s), s.manifest);
    CHECK(report.error_count == 0);
    CHECK(report.metrics.accuracy == 1.0);
    CHECK(report.metrics.f1 == 1.0);
    CHECK(report.confusion == ConfusionMatrix{10, 0, 10, 0});
    CHECK(s.short_circuited.size() == 1);
}

TEST_CASE("golden suite with parallel workers matches serial") {
    const auto& s = scenario();
    const auto serial = evaluate(golden::make_pipeline(s), s.manifest);
    EvalConfig cfg;
    cfg.workers = 4;
    CHECK(evaluate(golden::make_pipeline(s), s.manifest, cfg) == serial);
}

TEST_CASE("perturbed fixtures flip exactly their rows") {
    auto s = scenario();
    const auto base = evaluate(golden::make_pipeline(s), s.manifest);
    const std::vector<std::string> victims = {s.manifest[2].video_id, s.manifest[7].video_id};
    for (const auto& v : victims) golden::flip_verdict(s, v);
    const auto flipped = evaluate(golden::make_pipeline(s), s.manifest);
    std::vector<std::string> changed;
    for (std::size_t i = 0; i < base.per_video.size(); ++i) {
        if (base.per_video[i].predicted != flipped.per_video[i].predicted) changed.push_back(flipped.per_video[i].video_id);
    }
    std::sort(changed.begin(), changed.end());
    auto expected = victims;
    std::sort(expected.begin(), expected.end());
    CHECK(changed == expected);
    // manifest[2] is fake and becomes a false negative; manifest[7] is real and becomes a false positive.
    CHECK(flipped.confusion == ConfusionMatrix{9, 1, 9, 1});
    CHECK(flipped.metrics.accuracy == doctest::Approx(0.9));
}

TEST_CASE("no outbound payload carries video metadata") {
    const auto& s = scenario();
    auto log = std::make_shared<PayloadLog>();
    evaluate(golden::make_pipeline(s, log), s.manifest);
    CHECK(log->size() > 40);
    std::size_t hits = 0;
    for (const auto& [channel, payload] : log->entries()) {
        for (const auto& e : s.manifest) {
            hits += payload.find(e.video_id) != std::string::npos;
            hits += payload.find(*e.media_locator) != std::string::npos;
            hits += payload.find(*e.source_url) != std::string::npos;
        }
    }
    CHECK(hits == 0);
}

TEST_CASE("failures land in the error column") {
    auto s = scenario();
    s.fixture["llm"].erase(s.verdict_keys.at(s.manifest[4].video_id));
    const auto report = evaluate(golden::make_pipeline(s), s.manifest);
    CHECK(report.error_count == 1);
    const auto it = std::find_if(report.per_video.begin(), report.per_video.end(),
                                 [&](const PerVideoRow& r) { return r.video_id == s.manifest[4].video_id; });
    REQUIRE(it != report.per_video.end());
    REQUIRE(it->error.has_value());
    CHECK(it->error->rfind("LlmUnavailable", 0) == 0);
    CHECK(report.confusion.total() == 19);

    EvalConfig strict;
    strict.fail_fast = true;
    CHECK(code_of([&] { evaluate(golden::make_pipeline(s), s.manifest, strict); }) == ErrorCode::LlmUnavailable);
}

TEST_CASE("precomputed entries bypass stage 1") {
    Pipeline p;
    ManifestEntry e;
    e.video_id = "pre";
    e.precomputed = PrecomputedInput{"", {}};
    const auto v = run_pipeline(p, e);
    CHECK(v.short_circuited);
    ManifestEntry bare;
    bare.video_id = "bare";
    CHECK(code_of([&] { prepare_input(p, bare); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { evaluate(p, {}); }) == ErrorCode::EmptyEvaluation);
}
