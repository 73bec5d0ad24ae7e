#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unistd.h>

#include "classilist/csv.hpp"
#include "classilist/error.hpp"
#include "classilist/ingestion.hpp"
#include "support/fixtures.hpp"

using namespace classilist;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("classilist_ingest_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Issue> load_errors(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const LoadError& e) {
        return e.issues();
    }
    return {};
}

const std::string kHeader = "id,actual,score:A,score:B,score:C\n";

void copy_t1(const fs::path& dir) {
    for (const char* f : {"manifest.json", "predictions.csv", "features.csv"})
        fs::copy_file(testing::t1_bundle_dir() / f, dir / f);
}

}  // namespace

TEST_CASE("csv::parse handles quoting, CRLF, blank lines and a BOM") {
    const auto r = csv::parse("\xEF\xBB\xBFid,x\r\n\r\n\"a,b\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\n");
    CHECK_FALSE(r.unterminated_quote_line);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].fields == std::vector<std::string>{"id", "x"});
    CHECK(r.rows[0].line == 1);
    CHECK(r.rows[1].fields == std::vector<std::string>{"a,b", "say \"hi\""});
    CHECK(r.rows[1].line == 3);
    CHECK(r.rows[2].fields == std::vector<std::string>{"multi\nline", "2"});
    CHECK(r.rows[2].line == 4);

    const auto empty_fields = csv::parse("a,,\n");
    CHECK(empty_fields.rows[0].fields == std::vector<std::string>{"a", "", ""});

    const auto open = csv::parse("a,b\n\"never closed,1\n");
    REQUIRE(open.unterminated_quote_line);
    CHECK(*open.unterminated_quote_line == 2);
}

TEST_CASE("csv escape round-trips through parse") {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""};
    std::string text;
    csv::append_row(text, fields);
    CHECK(text.back() == '\n');
    const auto r = csv::parse(text);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].fields == fields);
    CHECK(csv::escape("plain") == "plain");
}

TEST_CASE("csv number formatting is shortest and exact") {
    CHECK(csv::format_number(0.1) == "0.1");
    CHECK(csv::format_number(1.0) == "1");
    CHECK(csv::format_number(0.0) == "0");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const double v = unit(rng) * std::pow(10.0, static_cast<int>(rng() % 12) - 6);
        CHECK(csv::parse_number(csv::format_number(v)) == v);
    }
    CHECK(csv::parse_number(" 2.5 ") == 2.5);
    CHECK(csv::parse_number("+3") == 3.0);
    CHECK_FALSE(csv::parse_number("abc"));
    CHECK_FALSE(csv::parse_number("1.5x"));
    CHECK_FALSE(csv::parse_number(""));
    CHECK(std::isinf(*csv::parse_number("inf")));
    CHECK(std::isnan(*csv::parse_number("nan")));
}

TEST_CASE("parse_predictions reads T1") {
    const auto table = parse_predictions(slurp(testing::t1_bundle_dir() / "predictions.csv"));
    CHECK(table.class_names == std::vector<std::string>{"A", "B", "C"});
    REQUIRE(table.records.size() == 6);
    CHECK(table.records[3].sample_id == "s4");
    CHECK(table.records[3].actual == 2);
    CHECK(table.records[3].scores == std::vector<double>{0.5, 0.2, 0.3});
    CHECK(table.lines == std::vector<std::size_t>{2, 3, 4, 5, 6, 7});

    std::istringstream in(kHeader + "s1,B,1,2,3\n");
    CHECK(parse_predictions(in).records.size() == 1);
}

TEST_CASE("parse_predictions ignores unknown columns") {
    const auto table = parse_predictions("note,id,actual,score:x,score:y\nhello,a,y,0.2,0.8\n");
    CHECK(table.class_names == std::vector<std::string>{"x", "y"});
    CHECK(table.records[0].actual == 1);
}

TEST_CASE("parse_predictions reports an unknown actual label on its line") {
    const auto issues = load_errors([] {
        parse_predictions(kHeader + "s1,A,0.9,0.1,0\ns2,D,0.1,0.2,0.7\n");
    });
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].line == 3);
    CHECK(issues[0].file == "predictions.csv");
    CHECK(issues[0].message.find("'D'") != std::string::npos);
    CHECK(issues[0].to_string().rfind("predictions.csv:3: ", 0) == 0);
}

TEST_CASE("parse_predictions collects every row problem") {
    const std::string text = kHeader +
                             "s1,A,0.9,0.1,0\n"
                             "s1,A,0.9,0.1,0\n"
                             ",A,0.9,0.1,0\n"
                             "s4,A,x,0.1,0\n"
                             "s5,A,-0.1,0.1,0\n"
                             "s6,A,0,0,0\n"
                             "s7,A,inf,0,0\n"
                             "s8,A,0.1\n";
    const auto issues = load_errors([&] { parse_predictions(text); });
    REQUIRE(issues.size() == 7);
    for (std::size_t i = 0; i < issues.size(); ++i) CHECK(issues[i].line == i + 3);
    CHECK(issues[0].message.find("line 2") != std::string::npos);
}

TEST_CASE("parse_predictions header errors") {
    CHECK(load_errors([] { parse_predictions(""); }).size() == 1);
    CHECK(load_errors([] { parse_predictions("id,actual,score:A\ns1,A,1\n"); }).size() == 1);
    CHECK(load_errors([] { parse_predictions("id,score:A,score:B\ns1,1,0\n"); }).size() >= 1);
    CHECK(load_errors([] { parse_predictions("id,id,actual,score:A,score:B\n"); }).size() >= 1);

    const auto no_rows = load_errors([] { parse_predictions(kHeader); });
    REQUIRE(no_rows.size() == 1);
    CHECK(no_rows[0].line == 2);
}

TEST_CASE("parse_features") {
    const std::unordered_set<std::string> known{"s1", "s2"};
    const auto t = parse_features("id,f1,f2\ns1,1.5,\ns2,,-2\n", known);
    CHECK(t.names == std::vector<std::string>{"f1", "f2"});
    CHECK(t.values.at("s1") == std::vector<FeatureValue>{1.5, std::nullopt});
    CHECK(t.values.at("s2") == std::vector<FeatureValue>{std::nullopt, -2.0});

    const auto issues = load_errors([&] {
        parse_features("id,f1\ns1,x\nzz,1\ns1,2\ns2,1,2\n", known);
    });
    REQUIRE(issues.size() == 4);
    CHECK(issues[0].line == 2);
    CHECK(issues[1].line == 3);
    CHECK(issues[2].line == 4);
    CHECK(issues[3].line == 5);

    CHECK(load_errors([&] { parse_features("name,f1\n", known); }).size() == 1);
}

TEST_CASE("manifest parsing") {
    const auto m = BundleManifest::from_json(slurp(testing::t1_bundle_dir() / "manifest.json"),
                                             "manifest.json");
    CHECK(m.classes == std::vector<std::string>{"A", "B", "C"});
    CHECK(m.features == std::vector<std::string>{"f1"});
    CHECK(m.features_file == "features.csv");
    CHECK(BundleManifest::from_json(m.to_json(), "m") == m);

    CHECK(load_errors([] { BundleManifest::from_json("{", "m"); }).size() == 1);
    CHECK(load_errors([] { BundleManifest::from_json("[]", "m"); }).size() == 1);
    CHECK(load_errors([] {
              BundleManifest::from_json(R"({"format_version":"9","classes":["a","b"]})", "m");
          }).size() == 1);
    CHECK(load_errors([] {
              BundleManifest::from_json(R"({"format_version":"1","classes":"a"})", "m");
          }).size() == 1);
}

TEST_CASE("load_bundle reads the T1 bundle") {
    const auto b = load_bundle(testing::t1_bundle_dir());
    const auto& d = b.dataset;
    CHECK(d.class_count() == 3);
    CHECK(d.size() == 6);
    CHECK(d.feature_count() == 1);
    CHECK(b.warnings.empty());
    CHECK(d == testing::t1());

    const auto via_manifest = load_bundle(testing::t1_bundle_dir() / "manifest.json");
    CHECK(via_manifest.dataset == d);
}

TEST_CASE("load_bundle environment errors") {
    TempDir tmp;
    CHECK_THROWS_AS(load_bundle(tmp.path), IoError);
    CHECK_THROWS_AS(load_bundle(tmp.path / "nope" / "manifest.json"), IoError);

    copy_t1(tmp.path);
    fs::remove(tmp.path / "predictions.csv");
    CHECK_THROWS_AS(load_bundle(tmp.path), IoError);
}

TEST_CASE("load_bundle reports content errors with lines") {
    TempDir tmp;
    copy_t1(tmp.path);
    write(tmp.path / "predictions.csv", kHeader + "s1,A,0.9,0.1,0\ns2,D,0.1,0.2,0.7\n");
    write(tmp.path / "features.csv", "id,f1\ns1,1\n");
    const auto issues = load_errors([&] { load_bundle(tmp.path); });
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].to_string().rfind("predictions.csv:3: ", 0) == 0);

    write(tmp.path / "predictions.csv", "id,actual,score:A,score:B\ns1,A,1,0\n");
    const auto mismatch = load_errors([&] { load_bundle(tmp.path); });
    REQUIRE(mismatch.size() == 1);
    CHECK(mismatch[0].file == "manifest.json");
}

TEST_CASE("images are attached only when present") {
    TempDir tmp;
    copy_t1(tmp.path);
    auto manifest = BundleManifest::from_json(slurp(tmp.path / "manifest.json"), "m");
    manifest.has_images = true;
    write(tmp.path / "manifest.json", manifest.to_json());

    auto d = load_bundle(tmp.path).dataset;
    for (const auto& r : d.records()) CHECK_FALSE(r.image_ref);
    CHECK_FALSE(d.has_images());

    fs::create_directories(tmp.path / "images");
    write(tmp.path / "images" / "s2.png", "png");
    write(tmp.path / "images" / "s5.jpg", "jpg");
    d = load_bundle(tmp.path).dataset;
    CHECK(d.has_images());
    CHECK(d.record(1).image_ref == (tmp.path / "images" / "s2.png").string());
    CHECK(d.record(4).image_ref == (tmp.path / "images" / "s5.jpg").string());
    CHECK_FALSE(d.record(0).image_ref);

    TempDir out;
    write_bundle(d, out.path);
    CHECK(slurp(out.path / "images" / "s2.png") == "png");
    const auto again = load_bundle(out.path).dataset;
    CHECK(again.record(4).image_ref == (out.path / "images" / "s5.jpg").string());
}

TEST_CASE("normalization on load") {
    TempDir tmp;
    copy_t1(tmp.path);
    write(tmp.path / "predictions.csv",
          kHeader + "s1,A,2,1,1\ns2,A,1,3,0\ns3,B,0,1,0\ns4,C,1,1,2\ns5,C,0,0,5\ns6,B,3,3,0\n");

    const auto raw = load_bundle(tmp.path);
    CHECK(raw.dataset.record(0).scores == std::vector<double>{2, 1, 1});
    CHECK_FALSE(raw.dataset.normalized());

    const auto normalized = load_bundle(tmp.path, LoadOptions{true});
    CHECK(normalized.dataset.normalized());
    CHECK(normalized.dataset.record(0).scores == std::vector<double>{0.5, 0.25, 0.25});
    for (RecordIndex i = 0; i < 6; ++i)
        CHECK(normalized.dataset.predicted(i) == raw.dataset.predicted(i));

    auto manifest = BundleManifest::from_json(slurp(tmp.path / "manifest.json"), "m");
    manifest.normalized = true;
    write(tmp.path / "manifest.json", manifest.to_json());
    const auto flagged = load_bundle(tmp.path);
    // s3 already sums to 1 and is left alone
    REQUIRE(flagged.warnings.size() == 5);
    CHECK(flagged.warnings[0].line == 2);
    CHECK(flagged.warnings[2].line == 5);
    CHECK(flagged.dataset.record(0).scores == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(flagged.dataset.record(2).scores == std::vector<double>{0, 1, 0});
}

TEST_CASE("bundle round trip for T1") {
    TempDir a, b;
    const auto d = testing::t1();
    write_bundle(d, a.path);
    const auto loaded = load_bundle(a.path).dataset;
    CHECK(loaded == d);
    write_bundle(loaded, b.path);
    for (const char* f : {"manifest.json", "predictions.csv", "features.csv"})
        CHECK(slurp(a.path / f) == slurp(b.path / f));
}

TEST_CASE("bundle round trip for random datasets") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        TempDir a, b;
        const auto d = testing::random_dataset(seed, {300, 10, 3, seed % 2 == 0});
        write_bundle(d, a.path);
        const auto loaded = load_bundle(a.path).dataset;
        REQUIRE(loaded.size() == d.size());
        for (RecordIndex i = 0; i < d.size(); ++i) {
            CHECK(loaded.record(i).sample_id == d.record(i).sample_id);
            CHECK(loaded.record(i).actual == d.record(i).actual);
            for (ClassIndex c = 0; c < d.class_count(); ++c)
                CHECK(std::abs(loaded.record(i).scores[c] - d.record(i).scores[c]) <= 1e-9);
            CHECK(loaded.record(i).features == d.record(i).features);
        }
        CHECK(loaded.feature_names().size() == d.feature_count());
        CHECK(fs::exists(a.path / "features.csv") == (d.feature_count() > 0));
        write_bundle(loaded, b.path);
        const auto ta = serialize_bundle(d);
        const auto tb = serialize_bundle(loaded);
        CHECK(ta.manifest == tb.manifest);
        CHECK(ta.predictions == tb.predictions);
        CHECK(ta.features == tb.features);
        CHECK(slurp(a.path / "predictions.csv") == slurp(b.path / "predictions.csv"));
    }
}

TEST_CASE("a dataset without features writes no features file") {
    auto p = testing::t1_parts();
    p.feature_names.clear();
    for (auto& r : p.records) r.features.clear();
    const auto d = Dataset::build(p);
    TempDir tmp;
    const auto m = write_bundle(d, tmp.path);
    CHECK_FALSE(m.features_file);
    CHECK_FALSE(fs::exists(tmp.path / "features.csv"));
    CHECK(load_bundle(tmp.path).dataset == d);
}

TEST_CASE("sample ids with CSV metacharacters survive a round trip") {
    auto p = testing::t1_parts();
    p.records[0].sample_id = "a,b";
    p.records[1].sample_id = "say \"hi\"";
    p.class_names[1] = "B, the second";
    const auto d = Dataset::build(p);
    TempDir tmp;
    write_bundle(d, tmp.path);
    CHECK(load_bundle(tmp.path).dataset == d);
}

TEST_CASE("a rejected predictions row is not reported again by features.csv") {
    TempDir tmp;
    copy_t1(tmp.path);
    std::string preds = slurp(tmp.path / "predictions.csv");
    preds.replace(preds.find("s3,B,0.2"), 8, "s3,B,-0.2");
    write(tmp.path / "predictions.csv", preds);
    const auto issues = load_errors([&] { load_bundle(tmp.path); });
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].file == "predictions.csv");
    CHECK(issues[0].line == 4);
}
