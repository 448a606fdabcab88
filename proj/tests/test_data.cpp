#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcnlab/data.hpp"
#include "gcnlab/train.hpp"

using namespace gcnlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gcnlab_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

Dataset three_node_fixture() {
    Dataset d;
    d.name = "fixture3";
    d.graph = build_graph(3, {{0, 1}, {1, 2}});
    d.features = Tensor(3, 2);
    d.features(0, 0) = 0.25;
    d.features(0, 1) = 0.75;
    d.features(2, 1) = 1.0;  // node 1 keeps an empty feature row
    d.labels = {0, 1, 1};
    d.num_classes = 2;
    d.train_mask = {true, false, false};
    d.val_mask = {false, true, false};
    d.test_mask = {false, false, true};
    return d;
}

void check_equal(const Dataset& a, const Dataset& b) {
    CHECK(a.graph.n == b.graph.n);
    CHECK(a.graph.edges == b.graph.edges);
    CHECK(a.graph.degree == b.graph.degree);
    CHECK(a.features.data() == b.features.data());  // bit-exact
    CHECK(a.labels == b.labels);
    CHECK(a.train_mask == b.train_mask);
    CHECK(a.val_mask == b.val_mask);
    CHECK(a.test_mask == b.test_mask);
    CHECK(a.num_classes == b.num_classes);
}

}  // namespace

TEST_CASE("karate fixture: counts, split endpoints, one-hot features") {
    const Dataset d = load_karate();
    CHECK(d.n() == 34);
    CHECK(d.num_classes == 4);
    int degree_sum = 0;
    for (int v : d.graph.degree) degree_sum += v;
    CHECK(degree_sum == 156);

    int train_count = 0;
    for (bool b : d.train_mask) train_count += b;
    CHECK(train_count == 8);
    for (int i = 0; i < 34; ++i) CHECK_FALSE((d.train_mask[i] && d.test_mask[i]));

    CHECK(d.labels[0] != d.labels[33]);  // the classic split endpoints

    for (int i = 0; i < 34; ++i)
        for (int j = 0; j < 34; ++j) CHECK(d.features(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("bundle round trip is bit-exact") {
    const Dataset fixture = three_node_fixture();
    const fs::path dir = fresh_dir("roundtrip");
    write_bundle(fixture, dir);
    const Dataset loaded = load_bundle(dir);
    check_equal(fixture, loaded);

    // a second write/load cycle reproduces the files byte for byte
    const fs::path dir2 = fresh_dir("roundtrip2");
    write_bundle(loaded, dir2);
    for (const char* name : {"meta.tsv", "edges.tsv", "features.tsv", "labels.tsv", "splits.tsv"})
        CHECK(slurp(dir / name) == slurp(dir2 / name));

    const fs::path kdir = fresh_dir("karate_rt");
    const Dataset karate = load_karate();
    write_bundle(karate, kdir);
    check_equal(karate, load_bundle(kdir));
}

TEST_CASE("written fixture bytes match the golden layout") {
    const fs::path dir = fresh_dir("golden");
    write_bundle(three_node_fixture(), dir);
    CHECK(slurp(dir / "meta.tsv") == "3\t2\t2\n");
    CHECK(slurp(dir / "edges.tsv") == "0\t1\n1\t2\n");
    CHECK(slurp(dir / "features.tsv") == "0\t0\t0.25\n0\t1\t0.75\n2\t1\t1\n");
    CHECK(slurp(dir / "labels.tsv") == "0\t0\n1\t1\n2\t1\n");
    CHECK(slurp(dir / "splits.tsv") == "0\ttrain\n1\tval\n2\ttest\n");
}

TEST_CASE("load_bundle is insensitive to line order") {
    const fs::path dir = fresh_dir("ordered");
    write_bundle(three_node_fixture(), dir);
    const Dataset base = load_bundle(dir);

    const fs::path shuffled = fresh_dir("shuffled");
    spit(shuffled / "meta.tsv", slurp(dir / "meta.tsv"));
    spit(shuffled / "edges.tsv", "1\t2\n0\t1\n");
    spit(shuffled / "features.tsv", "2\t1\t1\n0\t1\t0.75\n0\t0\t0.25\n");
    spit(shuffled / "labels.tsv", "2\t1\n0\t0\n1\t1\n");
    spit(shuffled / "splits.tsv", "2\ttest\n1\tval\n0\ttrain\n");
    check_equal(base, load_bundle(shuffled));
}

TEST_CASE("feature rows are normalized to sum 1, zero rows stay zero") {
    const fs::path dir = fresh_dir("norm");
    write_bundle(three_node_fixture(), dir);
    spit(dir / "features.tsv", "0\t0\t2\n0\t1\t6\n2\t0\t5\n");
    const Dataset d = load_bundle(dir);
    CHECK(d.features(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(d.features(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(d.features(1, 0) == 0.0);
    CHECK(d.features(1, 1) == 0.0);
    CHECK(d.features(2, 0) == 1.0);
}

TEST_CASE("load_bundle errors name the file and line") {
    const fs::path dir = fresh_dir("errors");
    write_bundle(three_node_fixture(), dir);

    fs::remove(dir / "features.tsv");
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("features.tsv"),
                         std::runtime_error);
    spit(dir / "features.tsv", "0\t0\t0.25\n");

    SUBCASE("node id out of range") {
        spit(dir / "edges.tsv", "0\t7\n");
        CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("edges.tsv line 1"),
                             std::runtime_error);
    }
    SUBCASE("class id gap") {
        spit(dir / "labels.tsv", "0\t0\n1\t0\n2\t0\n");
        CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("gap"), std::runtime_error);
    }
    SUBCASE("inconsistent meta") {
        spit(dir / "meta.tsv", "3\t2\n");
        CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("meta.tsv"),
                             std::runtime_error);
    }
    SUBCASE("split without a label") {
        spit(dir / "labels.tsv", "0\t0\n2\t1\n");
        CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("splits.tsv"),
                             std::runtime_error);
    }
    SUBCASE("unknown split name") {
        spit(dir / "splits.tsv", "0\tteach\n");
        CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("teach"), std::runtime_error);
    }
}
